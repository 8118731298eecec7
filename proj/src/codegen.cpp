#include <tslagent/codegen.hpp>

#include <map>
#include <sstream>

namespace tslagent::codegen {

using nlohmann::json;
using synth::MealyMachine;

namespace {

void split( MealyMachine const& m, int state, int var, ltl::Letter fixed, std::vector<std::pair<int, bool>>& guard,
            std::vector<GuardedTransition>& out )
{
  auto const n = m.dict.num_inputs;
  // all valuations extending `fixed` on the remaining variables
  auto const free_mask = ( ( ltl::Letter{ 1 } << n ) - 1 ) & ~( ( ltl::Letter{ 1 } << var ) - 1 );
  auto const& first = m.step( state, fixed );
  bool uniform = true;
  for ( ltl::Letter sub = free_mask;; sub = ( sub - 1 ) & free_mask )
  {
    auto const& t = m.step( state, fixed | sub );
    if ( t.outputs != first.outputs || t.next != first.next )
    {
      uniform = false;
      break;
    }
    if ( sub == 0 )
      break;
  }
  if ( uniform )
  {
    out.push_back( GuardedTransition{ guard, first.outputs, first.next } );
    return;
  }
  guard.emplace_back( var, false );
  split( m, state, var + 1, fixed, guard, out );
  guard.back().second = true;
  split( m, state, var + 1, fixed | ( ltl::Letter{ 1 } << var ), guard, out );
  guard.pop_back();
}

json signal_json( spec::SignalTable const& t )
{
  auto names = []( std::set<std::string> const& s ) { return json( std::vector<std::string>( s.begin(), s.end() ) ); };
  json arities = json::object();
  json functions = json::object();
  for ( auto const& [k, v] : t.predicates )
    arities[k] = v;
  for ( auto const& [k, v] : t.functions )
    functions[k] = v;
  return json{ { "inputs", names( t.inputs ) },
               { "cells", names( t.cells ) },
               { "outputs", names( t.outputs ) },
               { "written_cells", names( t.written_cells ) },
               { "predicates", arities },
               { "functions", functions } };
}

spec::SignalTable signal_table( json const& j )
{
  spec::SignalTable t;
  for ( auto const& s : j.at( "inputs" ) )
    t.inputs.insert( s.get<std::string>() );
  for ( auto const& s : j.at( "cells" ) )
    t.cells.insert( s.get<std::string>() );
  for ( auto const& s : j.at( "outputs" ) )
    t.outputs.insert( s.get<std::string>() );
  for ( auto const& s : j.at( "written_cells" ) )
    t.written_cells.insert( s.get<std::string>() );
  for ( auto const& [k, v] : j.at( "predicates" ).items() )
    t.predicates[k] = v.get<std::size_t>();
  for ( auto const& [k, v] : j.at( "functions" ).items() )
    t.functions[k] = v.get<std::size_t>();
  return t;
}

std::string predicate_text( MealyMachine const& m, int prop )
{
  return m.dict.props.at( static_cast<std::size_t>( prop ) ).term;
}

} // namespace

std::vector<GuardedTransition> guarded_transitions( MealyMachine const& m, int state )
{
  std::vector<GuardedTransition> out;
  std::vector<std::pair<int, bool>> guard;
  split( m, state, 0, 0, guard, out );
  return out;
}

std::string update_value( ltl::PropInfo const& prop )
{
  auto arrow = prop.term.find( "<-" );
  if ( arrow == std::string::npos || prop.term.size() < 2 || prop.term.back() != ']' )
    return prop.term;
  auto start = arrow + 2;
  while ( start < prop.term.size() && prop.term[start] == ' ' )
    ++start;
  return prop.term.substr( start, prop.term.size() - 1 - start );
}

std::string guard_text( MealyMachine const& m, std::vector<std::pair<int, bool>> const& guard, Style )
{
  if ( guard.empty() )
    return "true";
  std::string text;
  for ( auto const& [prop, value] : guard )
  {
    if ( !text.empty() )
      text += " && ";
    text += ( value ? "" : "!" ) + predicate_text( m, prop );
  }
  return text;
}

json emit_json( MealyMachine const& m )
{
  json props = json::array();
  for ( auto const& p : m.dict.props )
  {
    json entry{ { "name", p.name }, { "term", p.term }, { "kind", p.input ? "input" : "output" } };
    if ( !p.input )
      entry["signal"] = p.signal;
    props.push_back( entry );
  }
  json groups = json::array();
  for ( auto const& g : m.dict.groups )
  {
    json alts = json::array();
    for ( int a : g.alternatives )
      alts.push_back( m.dict.name( a ) );
    groups.push_back( json{ { "signal", g.signal }, { "alternatives", alts } } );
  }
  json states = json::array();
  for ( int s = 0; s < m.num_states(); ++s )
  {
    json transitions = json::array();
    for ( auto const& t : guarded_transitions( m, s ) )
    {
      json guard = json::array();
      for ( auto const& [prop, value] : t.guard )
        guard.push_back( ( value ? "" : "!" ) + m.dict.name( prop ) );
      json updates = json::object();
      for ( auto const& g : m.dict.groups )
        for ( int a : g.alternatives )
          if ( ( t.outputs >> a ) & 1u )
            updates[g.signal] = m.dict.name( a );
      transitions.push_back( json{ { "guard", guard }, { "updates", updates }, { "next", t.next } } );
    }
    states.push_back( json{ { "id", s }, { "transitions", transitions } } );
  }
  return json{ { "format", artifact_format },
               { "version", artifact_version },
               { "initial", 0 },
               { "signals", signal_json( m.signals ) },
               { "props", props },
               { "groups", groups },
               { "states", states } };
}

std::string emit_json_text( MealyMachine const& m )
{
  return emit_json( m ).dump( 2 ) + "\n";
}

MealyMachine parse_artifact( json const& doc )
{
  try
  {
    if ( doc.at( "format" ).get<std::string>() != artifact_format )
      throw ArtifactError( "not an automaton artifact" );
    if ( doc.at( "version" ).get<int>() != artifact_version )
      throw ArtifactError( "unsupported artifact version " + doc.at( "version" ).dump() );
    if ( doc.at( "initial" ).get<int>() != 0 )
      throw ArtifactError( "initial state must be 0" );
    MealyMachine m;
    m.signals = signal_table( doc.at( "signals" ) );
    std::map<std::string, int> ids;
    bool outputs_started = false;
    for ( auto const& p : doc.at( "props" ) )
    {
      ltl::PropInfo info;
      info.name = p.at( "name" ).get<std::string>();
      info.term = p.at( "term" ).get<std::string>();
      auto kind = p.at( "kind" ).get<std::string>();
      if ( kind != "input" && kind != "output" )
        throw ArtifactError( "prop '" + info.name + "' has unknown kind '" + kind + "'" );
      info.input = kind == "input";
      if ( info.input && outputs_started )
        throw ArtifactError( "input prop '" + info.name + "' listed after output props" );
      if ( !info.input )
      {
        outputs_started = true;
        info.signal = p.at( "signal" ).get<std::string>();
      }
      else
        ++m.dict.num_inputs;
      if ( !ids.emplace( info.name, m.dict.size() ).second )
        throw ArtifactError( "duplicate prop '" + info.name + "'" );
      m.dict.props.push_back( info );
    }
    if ( m.dict.size() > ltl::max_props )
      throw ArtifactError( "too many props" );
    auto lookup = [&]( std::string const& name ) {
      auto it = ids.find( name );
      if ( it == ids.end() )
        throw ArtifactError( "unknown prop '" + name + "'" );
      return it->second;
    };
    for ( auto const& g : doc.at( "groups" ) )
    {
      ltl::OutputGroup group;
      group.signal = g.at( "signal" ).get<std::string>();
      for ( auto const& a : g.at( "alternatives" ) )
        group.alternatives.push_back( lookup( a.get<std::string>() ) );
      m.dict.groups.push_back( group );
    }
    auto const nv = m.num_valuations();
    auto const& states = doc.at( "states" );
    for ( std::size_t s = 0; s < states.size(); ++s )
    {
      if ( states[s].at( "id" ).get<std::size_t>() != s )
        throw ArtifactError( "state ids must be dense from 0" );
      std::vector<synth::Transition> row( nv );
      std::vector<char> seen( nv, 0 );
      for ( auto const& t : states[s].at( "transitions" ) )
      {
        ltl::Letter pos = 0;
        ltl::Letter neg = 0;
        for ( auto const& lit : t.at( "guard" ) )
        {
          auto text = lit.get<std::string>();
          bool negated = !text.empty() && text[0] == '!';
          auto prop = lookup( negated ? text.substr( 1 ) : text );
          if ( prop >= m.dict.num_inputs )
            throw ArtifactError( "guard of state " + std::to_string( s ) + " mentions output prop '" + text + "'" );
          ( negated ? neg : pos ) |= ltl::Letter{ 1 } << prop;
        }
        ltl::Letter outputs = 0;
        for ( auto const& [signal, alt] : t.at( "updates" ).items() )
        {
          auto prop = lookup( alt.get<std::string>() );
          if ( m.dict.props[static_cast<std::size_t>( prop )].signal != signal )
            throw ArtifactError( "update '" + alt.get<std::string>() + "' does not write '" + signal + "'" );
          outputs |= ltl::Letter{ 1 } << prop;
        }
        auto next = t.at( "next" ).get<int>();
        if ( next < 0 || static_cast<std::size_t>( next ) >= states.size() )
          throw ArtifactError( "transition of state " + std::to_string( s ) + " targets missing state" );
        for ( std::size_t v = 0; v < nv; ++v )
        {
          if ( ( v & pos ) != pos || ( v & neg ) != 0u )
            continue;
          if ( seen[v] )
            throw ArtifactError( "overlapping guards in state " + std::to_string( s ) );
          seen[v] = 1;
          row[v] = synth::Transition{ outputs, next };
        }
      }
      for ( std::size_t v = 0; v < nv; ++v )
        if ( !seen[v] )
          throw ArtifactError( "guards of state " + std::to_string( s ) + " are not exhaustive" );
      m.states.push_back( std::move( row ) );
    }
    try
    {
      m.validate();
    }
    catch ( std::invalid_argument const& e )
    {
      throw ArtifactError( e.what() );
    }
    return m;
  }
  catch ( json::exception const& e )
  {
    throw ArtifactError( std::string( "malformed artifact: " ) + e.what() );
  }
}

MealyMachine parse_artifact_text( std::string const& text )
{
  json doc;
  try
  {
    doc = json::parse( text );
  }
  catch ( json::exception const& e )
  {
    throw ArtifactError( std::string( "artifact is not valid JSON: " ) + e.what() );
  }
  return parse_artifact( doc );
}

std::string emit_pseudocode( MealyMachine const& m, Style style )
{
  bool const js = style == Style::JavaScript;
  std::ostringstream out;
  for ( int s = 0; s < m.num_states(); ++s )
  {
    out << ( s == 0 ? "" : "else " );
    if ( js )
      out << "if (currentState === " << s << ") {\n";
    else
      out << "if currentState == " << s << " {\n";
    auto transitions = guarded_transitions( m, s );
    for ( std::size_t k = 0; k < transitions.size(); ++k )
    {
      auto const& t = transitions[k];
      bool const conditional = !t.guard.empty();
      std::string indent = conditional ? "    " : "  ";
      if ( conditional )
      {
        auto cond = guard_text( m, t.guard, style );
        out << "  " << ( k == 0 ? "" : "else " ) << ( js ? "if (" + cond + ") {" : "if " + cond + " {" ) << "\n";
      }
      for ( auto const& g : m.dict.groups )
        for ( int a : g.alternatives )
          if ( ( t.outputs >> a ) & 1u )
            out << indent << g.signal << " = " << update_value( m.dict.props[static_cast<std::size_t>( a )] ) << "\n";
      out << indent << "currentState = " << t.next << "\n";
      if ( conditional )
        out << "  }\n";
    }
    out << "}\n";
  }
  return out.str();
}

json graph( MealyMachine const& m )
{
  json nodes = json::array();
  json edges = json::array();
  for ( int s = 0; s < m.num_states(); ++s )
  {
    nodes.push_back( json{ { "id", s }, { "initial", s == 0 } } );
    for ( auto const& t : guarded_transitions( m, s ) )
    {
      json updates = json::object();
      for ( auto const& g : m.dict.groups )
        for ( int a : g.alternatives )
          if ( ( t.outputs >> a ) & 1u )
            updates[g.signal] = update_value( m.dict.props[static_cast<std::size_t>( a )] );
      edges.push_back(
          json{ { "source", s }, { "target", t.next }, { "guard", guard_text( m, t.guard ) }, { "updates", updates } } );
    }
  }
  return json{ { "nodes", nodes }, { "edges", edges } };
}

} // namespace tslagent::codegen
