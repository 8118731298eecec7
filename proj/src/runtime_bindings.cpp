#include <tslagent/runtime.hpp>

#include <algorithm>

namespace tslagent::runtime {

std::string text_of( Value const& v )
{
  if ( auto const* s = std::get_if<std::string>( &v ) )
    return *s;
  return std::to_string( std::get<std::int64_t>( v ) );
}

json to_json( Value const& v )
{
  if ( auto const* s = std::get_if<std::string>( &v ) )
    return *s;
  return std::get<std::int64_t>( v );
}

Value value_from_json( json const& j )
{
  if ( j.is_number_integer() )
    return j.get<std::int64_t>();
  if ( j.is_string() )
    return j.get<std::string>();
  throw BindingError( "cell values must be strings or integers, got " + j.dump() );
}

json OracleCall::to_json() const
{
  return { { "kind", kind }, { "symbol", symbol }, { "backend", backend }, { "request", request },
           { "response", response } };
}

std::size_t TermRegistry::count( Binding::Kind kind ) const
{
  auto pred = [kind]( auto const& entry ) { return entry.second.kind == kind; };
  return static_cast<std::size_t>( std::count_if( predicates.begin(), predicates.end(), pred ) +
                                   std::count_if( functions.begin(), functions.end(), pred ) );
}

namespace {

Binding::Kind parse_kind( std::string const& kind, std::string const& symbol )
{
  if ( kind == "llm" )
    return Binding::Kind::Llm;
  if ( kind == "builtin" )
    return Binding::Kind::Builtin;
  if ( kind == "scripted" )
    return Binding::Kind::Scripted;
  throw BindingError( "binding for '" + symbol + "' has unknown kind '" + kind + "'" );
}

Binding parse_binding( json const& j, std::string const& symbol )
{
  if ( !j.is_object() )
    throw BindingError( "binding for '" + symbol + "' must be an object" );
  Binding b;
  b.kind = parse_kind( j.value( "kind", std::string{} ), symbol );
  b.prompt = j.value( "prompt", std::string{} );
  b.builtin = j.value( "builtin", std::string{} );
  if ( j.contains( "params" ) )
    b.params = j.at( "params" );
  return b;
}

bool has_placeholder( std::string const& text, std::string const& name )
{
  return text.find( "{" + name + "}" ) != std::string::npos;
}

void require_placeholders( Binding const& b, std::string const& symbol, std::vector<std::string> const& names )
{
  if ( b.kind != Binding::Kind::Llm )
    return;
  for ( auto const& n : names )
    if ( !has_placeholder( b.prompt, n ) )
      throw BindingError( "prompt template for '" + symbol + "' lacks the {" + n + "} placeholder" );
}

bool is_function_builtin( std::string const& name )
{
  return name == "add" || name == "sub" || name == "mul" || name == "id";
}

bool is_predicate_builtin( std::string const& name )
{
  return name == "at_least" || name == "at_most" || name == "nonempty";
}

} // namespace

LlmSettings llm_settings_from_json( json const& j )
{
  LlmSettings s;
  s.base_url = j.value( "base_url", s.base_url );
  s.model = j.value( "model", s.model );
  s.api_key_env = j.value( "api_key_env", s.api_key_env );
  s.seed = j.value( "seed", s.seed );
  s.journal = j.value( "journal", s.journal );
  s.mode = j.value( "mode", s.mode );
  s.timeout_seconds = j.value( "timeout_seconds", s.timeout_seconds );
  if ( s.mode != "live" && s.mode != "record" && s.mode != "replay" )
    throw BindingError( "llm mode must be live, record or replay, got '" + s.mode + "'" );
  if ( s.mode != "live" && s.journal.empty() )
    throw BindingError( "llm mode '" + s.mode + "' needs a journal path" );
  return s;
}

BindingConfig binding_config_from_json( json const& j )
{
  if ( !j.is_object() )
    throw BindingError( "binding configuration must be a JSON object" );
  BindingConfig c;
  auto const predicates = j.value( "predicates", json::object() );
  auto const functions = j.value( "functions", json::object() );
  auto const cells = j.value( "cells", json::object() );
  for ( auto const& [name, b] : predicates.items() )
    c.predicates[name] = parse_binding( b, name );
  for ( auto const& [name, b] : functions.items() )
    c.functions[name] = parse_binding( b, name );
  if ( j.contains( "summarizer" ) )
  {
    auto const& s = j.at( "summarizer" );
    c.summarizer = parse_binding( s, "summarizer" );
    c.summary_cell = s.value( "cell", std::string{} );
  }
  for ( auto const& [name, v] : cells.items() )
    c.initial_cells[name] = value_from_json( v );
  if ( j.contains( "llm" ) )
    c.llm = llm_settings_from_json( j.at( "llm" ) );
  c.scripted = j.value( "scripted", json::object() );
  return c;
}

TermRegistry bind_terms( spec::SignalTable const& table, BindingConfig const& config,
                         std::shared_ptr<ScriptedOracle> scripted, std::shared_ptr<ChatBackend> llm )
{
  TermRegistry r;
  r.signals = table;
  r.scripted = std::move( scripted );
  r.llm = std::move( llm );

  for ( auto const& [name, arity] : table.predicates )
  {
    auto it = config.predicates.find( name );
    if ( it == config.predicates.end() )
      throw BindingError( "no binding for predicate '" + name + "'" );
    auto const& b = it->second;
    if ( arity == 0 )
      require_placeholders( b, name, { "user_prompt" } );
    else
      require_placeholders( b, name, { "summary" } );
    if ( b.kind == Binding::Kind::Builtin && !is_predicate_builtin( b.builtin ) )
      throw BindingError( "unknown builtin '" + b.builtin + "' for predicate '" + name + "'" );
    r.predicates[name] = b;
  }
  for ( auto const& [name, arity] : table.functions )
  {
    auto it = config.functions.find( name );
    if ( it == config.functions.end() )
      throw BindingError( "no binding for function '" + name + "'" );
    auto const& b = it->second;
    require_placeholders( b, name, { "summary", "user_prompt" } );
    if ( b.kind == Binding::Kind::Builtin && !is_function_builtin( b.builtin ) )
      throw BindingError( "unknown builtin '" + b.builtin + "' for function '" + name + "'" );
    r.functions[name] = b;
  }
  for ( auto const& [name, b] : config.predicates )
    if ( !table.predicates.count( name ) )
      throw BindingError( "binding for unknown predicate '" + name + "'" );
  for ( auto const& [name, b] : config.functions )
    if ( !table.functions.count( name ) )
      throw BindingError( "binding for unknown function '" + name + "'" );

  // text cells start empty, counters at zero
  for ( auto const& c : table.cells )
    r.initial_cells[c] = table.written_cells.count( c ) ? Value{ std::int64_t{ 0 } } : Value{ std::string{} };
  for ( auto const& [name, v] : config.initial_cells )
  {
    if ( !table.cells.count( name ) )
      throw BindingError( "initial value for unknown cell '" + name + "'" );
    r.initial_cells[name] = v;
  }

  r.summarizer = config.summarizer;
  r.summary_cell = config.summary_cell;
  if ( r.summarizer )
  {
    require_placeholders( *r.summarizer, "summarizer", { "summary", "passage" } );
    if ( r.summarizer->kind == Binding::Kind::Builtin )
      throw BindingError( "the summarizer cannot be a builtin" );
    if ( r.summary_cell.empty() )
    {
      std::vector<std::string> candidates;
      for ( auto const& c : table.cells )
        if ( !table.written_cells.count( c ) )
          candidates.push_back( c );
      if ( candidates.size() != 1 )
        throw BindingError( "summarizer needs an explicit cell" );
      r.summary_cell = candidates.front();
    }
    if ( !table.cells.count( r.summary_cell ) )
      throw BindingError( "summarizer cell '" + r.summary_cell + "' is not a cell" );
  }

  bool needs_scripted = r.count( Binding::Kind::Scripted ) > 0 ||
                        ( r.summarizer && r.summarizer->kind == Binding::Kind::Scripted );
  bool needs_llm = r.count( Binding::Kind::Llm ) > 0 || ( r.summarizer && r.summarizer->kind == Binding::Kind::Llm );
  if ( needs_scripted && !r.scripted )
    throw BindingError( "scripted bindings need a scripted oracle" );
  if ( needs_llm && !r.llm )
    throw BindingError( "llm bindings need a chat backend" );
  if ( config.llm )
  {
    r.llm_model = config.llm->model;
    r.llm_seed = config.llm->seed;
  }
  return r;
}

BindingConfig scripted_binding_config( spec::SignalTable const& table )
{
  BindingConfig c;
  Binding scripted;
  scripted.kind = Binding::Kind::Scripted;
  for ( auto const& [name, arity] : table.predicates )
  {
    if ( name == "safeThreshold" && arity == 0 && table.cells.count( "safeCount" ) )
    {
      Binding b;
      b.kind = Binding::Kind::Builtin;
      b.builtin = "at_least";
      b.params = { { "cell", "safeCount" }, { "value", 3 } };
      c.predicates[name] = b;
    }
    else
      c.predicates[name] = scripted;
  }
  for ( auto const& [name, arity] : table.functions )
  {
    if ( name == "add" || name == "sub" || name == "mul" )
    {
      Binding b;
      b.kind = Binding::Kind::Builtin;
      b.builtin = name;
      c.functions[name] = b;
    }
    else
      c.functions[name] = scripted;
  }
  c.summarizer = scripted;
  return c;
}

} // namespace tslagent::runtime
