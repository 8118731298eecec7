#include <tslagent/runtime.hpp>

#include <algorithm>
#include <cctype>

namespace tslagent::runtime {

namespace {

using spec::FunctionTerm;

std::string trim( std::string s )
{
  auto not_space = []( unsigned char c ) { return !std::isspace( c ); };
  s.erase( s.begin(), std::find_if( s.begin(), s.end(), not_space ) );
  s.erase( std::find_if( s.rbegin(), s.rend(), not_space ).base(), s.end() );
  return s;
}

std::string render( std::string text, std::map<std::string, std::string> const& values )
{
  for ( auto const& [key, value] : values )
  {
    auto placeholder = "{" + key + "}";
    for ( auto pos = text.find( placeholder ); pos != std::string::npos;
          pos = text.find( placeholder, pos + value.size() ) )
      text.replace( pos, placeholder.size(), value );
  }
  return text;
}

std::int64_t as_int( Value const& v, std::string const& where )
{
  if ( auto const* i = std::get_if<std::int64_t>( &v ) )
    return *i;
  throw OracleError( where + " expects an integer, got text" );
}

/// Evaluation of one turn against a snapshot of the cell store.
class TurnEvaluator
{
public:
  TurnEvaluator( TermRegistry const& registry, std::map<std::string, Value> const& cells, CallContext ctx )
      : r_( registry ), cells_( cells ), ctx_( std::move( ctx ) )
  {
  }

  std::vector<OracleCall> calls;

  Value term( FunctionTerm const& t )
  {
    if ( t.kind == FunctionTerm::Kind::Signal )
    {
      auto it = cells_.find( t.name );
      if ( it == cells_.end() )
        throw OracleError( "signal '" + t.name + "' has no value" );
      return it->second;
    }
    if ( t.is_literal() )
      return std::int64_t{ std::stoll( t.name ) };
    std::vector<Value> args;
    for ( auto const& a : t.args )
      args.push_back( term( *a ) );
    return apply( t.name, args );
  }

  bool predicate( std::string const& name, std::vector<Value> const& args )
  {
    auto const& b = r_.predicates.at( name );
    switch ( b.kind )
    {
    case Binding::Kind::Builtin: {
      auto cell = b.params.value( "cell", std::string{} );
      Value v = args.empty() ? cells_.at( cell ) : args.front();
      bool result = false;
      if ( b.builtin == "nonempty" )
        result = !text_of( v ).empty();
      else
      {
        auto n = as_int( v, "builtin " + b.builtin );
        auto bound = b.params.value( "value", std::int64_t{ 0 } );
        result = b.builtin == "at_least" ? n >= bound : n <= bound;
      }
      record( "predicate", name, "builtin", { { "args", args_json( args ) } }, result ? "1" : "0" );
      return result;
    }
    case Binding::Kind::Scripted: {
      bool result = r_.scripted->predicate( name, args, next_context() );
      record( "predicate", name, "scripted", { { "args", args_json( args ) } }, result ? "1" : "0" );
      return result;
    }
    case Binding::Kind::Llm:
      break;
    }

    auto prompt = render( b.prompt, placeholders( args ) );
    json messages = json::array( { { { "role", "user" }, { "content", prompt } } } );
    std::vector<OracleCall> attempts;
    for ( int attempt = 0; attempt < 2; ++attempt )
    {
      auto request = chat_request( messages );
      auto reply = r_.llm->complete( request );
      attempts.push_back( { "predicate", name, "llm", request, reply } );
      calls.push_back( attempts.back() );
      auto answer = trim( reply );
      if ( answer == "0" || answer == "1" )
        return answer == "1";
      messages.push_back( { { "role", "assistant" }, { "content", reply } } );
      messages.push_back( { { "role", "user" }, { "content", "Respond with exactly one character: 0 or 1." } } );
    }
    throw OracleError( "predicate '" + name + "' did not answer 0 or 1", attempts );
  }

  Value apply( std::string const& name, std::vector<Value> const& args )
  {
    auto it = r_.functions.find( name );
    if ( it == r_.functions.end() )
      throw OracleError( "no binding for function '" + name + "'" );
    auto const& b = it->second;
    switch ( b.kind )
    {
    case Binding::Kind::Builtin: {
      Value result;
      if ( b.builtin == "id" )
      {
        if ( args.size() != 1 )
          throw OracleError( "builtin id takes one argument" );
        result = args.front();
      }
      else
      {
        if ( args.empty() )
          throw OracleError( "builtin " + b.builtin + " needs arguments" );
        auto acc = as_int( args.front(), "builtin " + b.builtin );
        for ( std::size_t k = 1; k < args.size(); ++k )
        {
          auto v = as_int( args[k], "builtin " + b.builtin );
          acc = b.builtin == "add" ? acc + v : b.builtin == "sub" ? acc - v : acc * v;
        }
        result = acc;
      }
      record( "function", name, "builtin", { { "args", args_json( args ) } }, text_of( result ) );
      return result;
    }
    case Binding::Kind::Scripted: {
      auto result = r_.scripted->generate( name, args, next_context() );
      record( "function", name, "scripted", { { "args", args_json( args ) } }, text_of( result ) );
      return result;
    }
    case Binding::Kind::Llm:
      break;
    }
    auto prompt = render( b.prompt, placeholders( args ) );
    auto request = chat_request( json::array( { { { "role", "user" }, { "content", prompt } } } ) );
    auto reply = r_.llm->complete( request );
    calls.push_back( { "function", name, "llm", request, reply } );
    return reply;
  }

  std::string summarize( std::string const& summary, std::string const& passage )
  {
    auto const& b = *r_.summarizer;
    if ( b.kind == Binding::Kind::Scripted )
    {
      auto result = r_.scripted->summarize( summary, passage, next_context() );
      record( "summarizer", "summarizer", "scripted", { { "summary", summary }, { "passage", passage } }, result );
      return result;
    }
    auto prompt = render( b.prompt, { { "summary", summary }, { "passage", passage }, { "user_prompt", ctx_.user_prompt } } );
    auto request = chat_request( json::array( { { { "role", "user" }, { "content", prompt } } } ) );
    auto reply = r_.llm->complete( request );
    calls.push_back( { "summarizer", "summarizer", "llm", request, reply } );
    return reply;
  }

private:
  CallContext next_context()
  {
    auto c = ctx_;
    c.call_index = counter_++;
    return c;
  }

  std::map<std::string, std::string> placeholders( std::vector<Value> const& args ) const
  {
    std::map<std::string, std::string> values{ { "user_prompt", ctx_.user_prompt } };
    for ( std::size_t k = 0; k < args.size(); ++k )
      values["arg" + std::to_string( k )] = text_of( args[k] );
    if ( !args.empty() )
      values["summary"] = text_of( args.front() );
    else if ( !r_.summary_cell.empty() )
      values["summary"] = text_of( cells_.at( r_.summary_cell ) );
    return values;
  }

  json chat_request( json messages ) const
  {
    return { { "model", r_.llm_model }, { "messages", std::move( messages ) }, { "temperature", 0 },
             { "seed", r_.llm_seed } };
  }

  static json args_json( std::vector<Value> const& args )
  {
    json a = json::array();
    for ( auto const& v : args )
      a.push_back( to_json( v ) );
    return a;
  }

  void record( std::string kind, std::string const& symbol, std::string backend, json request, std::string response )
  {
    calls.push_back( { std::move( kind ), symbol, std::move( backend ), std::move( request ), std::move( response ) } );
  }

  TermRegistry const& r_;
  std::map<std::string, Value> const& cells_;
  CallContext ctx_;
  int counter_ = 0;
};

ltl::Letter read_inputs( TurnEvaluator& eval, ltl::PropDictionary const& dict, std::map<std::string, bool>& valuation )
{
  ltl::Letter inputs = 0;
  for ( int p = 0; p < dict.num_inputs; ++p )
  {
    auto const& info = dict.props[static_cast<std::size_t>( p )];
    auto atom = spec::parse_formula( info.term );
    std::vector<Value> args;
    for ( auto const& a : atom->args )
      args.push_back( eval.term( *a ) );
    bool value = eval.predicate( atom->name, args );
    valuation[info.term] = value;
    if ( value )
      inputs |= ltl::Letter{ 1 } << p;
  }
  return inputs;
}

} // namespace

json TurnResult::to_json() const
{
  json j;
  j["turn"] = turn;
  j["state"] = state;
  j["next_state"] = next_state;
  j["user_prompt"] = user_prompt;
  j["valuation"] = valuation;
  j["updates"] = updates;
  j["generated"] = json::object();
  for ( auto const& [k, v] : generated )
    j["generated"][k] = runtime::to_json( v );
  j["cells"] = json::object();
  for ( auto const& [k, v] : cells )
    j["cells"][k] = runtime::to_json( v );
  j["calls"] = json::array();
  for ( auto const& c : calls )
    j["calls"].push_back( c.to_json() );
  return j;
}

std::string TurnResult::jsonl() const
{
  return to_json().dump();
}

Session::Session( synth::MealyMachine machine, TermRegistry registry, std::uint64_t seed,
                  std::map<std::string, Value> const& initial_cells )
    : machine_( std::move( machine ) ), registry_( std::move( registry ) ), seed_( seed )
{
  if ( !( machine_.signals == registry_.signals ) )
    throw BindingError( "bindings were made for a different signal table" );
  cells_ = registry_.initial_cells;
  for ( auto const& [name, v] : initial_cells )
  {
    if ( !cells_.count( name ) )
      throw BindingError( "initial value for unknown cell '" + name + "'" );
    cells_[name] = v;
  }
}

TurnResult Session::step_turn( std::string const& user_prompt )
{
  auto const& dict = machine_.dict;
  TurnResult result;
  result.turn = turn_;
  result.state = state_;
  result.user_prompt = user_prompt;

  TurnEvaluator eval( registry_, cells_, { seed_, turn_, 0, user_prompt } );
  try
  {
    // 1. predicates over the current cells
    result.inputs = read_inputs( eval, dict, result.valuation );

    // 2. the machine picks the update terms
    auto const& t = machine_.step( state_, result.inputs );
    result.outputs = hook_ ? hook_( result.inputs, t.outputs, { seed_, turn_, -1, user_prompt } ) : t.outputs;
    result.next_state = t.next;

    // 3. updates, all evaluated against the pre-turn cells
    auto next_cells = cells_;
    std::string passage;
    for ( auto const& group : dict.groups )
    {
      for ( int p : group.alternatives )
      {
        if ( !( ( result.outputs >> p ) & 1u ) )
          continue;
        auto const& info = dict.props[static_cast<std::size_t>( p )];
        auto atom = spec::parse_formula( info.term );
        auto value = eval.term( *atom->value );
        result.updates[group.signal] = info.term;
        result.generated[group.signal] = value;
        if ( next_cells.count( group.signal ) )
          next_cells[group.signal] = value;
        else
          passage += ( passage.empty() ? "" : "\n" ) + text_of( value );
      }
    }

    // 4. refresh the summary
    if ( registry_.summarizer )
    {
      auto const& cell = registry_.summary_cell;
      next_cells[cell] = eval.summarize( text_of( next_cells.at( cell ) ), passage );
    }

    result.cells = next_cells;
    result.calls = std::move( eval.calls );
    cells_ = std::move( next_cells );
  }
  catch ( OracleError const& e )
  {
    auto transcript = eval.calls;
    for ( auto const& c : e.transcript() )
      if ( std::find_if( transcript.begin(), transcript.end(),
                         [&]( auto const& x ) { return x.request == c.request && x.response == c.response; } ) ==
           transcript.end() )
        transcript.push_back( c );
    throw OracleError( "turn " + std::to_string( turn_ ) + ": " + e.what(), transcript );
  }
  catch ( spec::SpecError const& e )
  {
    throw OracleError( "turn " + std::to_string( turn_ ) + ": malformed prop term: " + e.what(), eval.calls );
  }

  state_ = result.next_state;
  ++turn_;
  trace_.push_back( result );
  return result;
}

ltl::Letter Session::evaluate_inputs( std::string const& user_prompt ) const
{
  TurnEvaluator eval( registry_, cells_, { seed_, turn_, 0, user_prompt } );
  std::map<std::string, bool> valuation;
  return read_inputs( eval, machine_.dict, valuation );
}

json Session::to_json() const
{
  json j;
  j["state"] = state_;
  j["turn"] = turn_;
  j["seed"] = seed_;
  j["cells"] = json::object();
  for ( auto const& [k, v] : cells_ )
    j["cells"][k] = runtime::to_json( v );
  j["trace"] = json::array();
  for ( auto const& t : trace_ )
    j["trace"].push_back( t.to_json() );
  return j;
}

Session start_session( synth::MealyMachine const& machine, TermRegistry const& registry, std::uint64_t seed,
                       std::map<std::string, Value> const& initial_cells )
{
  return Session( machine, registry, seed, initial_cells );
}

bool replays_on_machine( synth::MealyMachine const& m, std::vector<TurnResult> const& trace )
{
  int state = 0;
  for ( auto const& t : trace )
  {
    if ( t.state != state )
      return false;
    auto const& step = m.step( state, t.inputs );
    if ( step.outputs != t.outputs || step.next != t.next_state )
      return false;
    state = step.next;
  }
  return true;
}

} // namespace tslagent::runtime
