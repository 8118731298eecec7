#include <tslagent/causality.hpp>
#include <tslagent/cli.hpp>
#include <tslagent/codegen.hpp>
#include <tslagent/monitor.hpp>
#include <tslagent/serve.hpp>
#include <tslagent/world.hpp>

#include <CLI11.hpp>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace tslagent::cli {

namespace {

using runtime::json;
namespace fs = std::filesystem;

struct IoError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct Diagnosed : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

std::string read_file( std::string const& path )
{
  std::ifstream in( path );
  if ( !in )
    throw IoError( "cannot read " + path );
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file( std::string const& path, std::string const& text )
{
  std::ofstream out( path );
  if ( !out || !( out << text ) )
    throw IoError( "cannot write " + path );
}

json read_json( std::string const& path )
{
  auto text = read_file( path );
  try
  {
    return json::parse( text );
  }
  catch ( json::parse_error const& e )
  {
    throw std::invalid_argument( path + ": " + e.what() );
  }
}

std::string parent_dir( std::string const& path )
{
  return fs::absolute( path ).parent_path().string();
}

ltl::LtlSpec load_spec( std::vector<std::string> const& paths )
{
  std::vector<std::string> texts;
  for ( auto const& p : paths )
    texts.push_back( read_file( p ) );
  std::vector<spec::SpecAst> parts;
  for ( std::size_t k = 0; k < texts.size(); ++k )
  {
    try
    {
      parts.push_back( spec::parse_spec( texts[k] ) );
    }
    catch ( spec::SpecError const& e )
    {
      throw Diagnosed( e.diagnostic( texts[k], paths[k] ) );
    }
  }
  return ltl::abstract_to_ltl( spec::compile_spec( spec::compose( parts ) ) );
}

synth::MealyMachine load_artifact( std::string const& path )
{
  return codegen::parse_artifact_text( read_file( path ) );
}

runtime::TermRegistry load_bindings( std::string const& path, spec::SignalTable const& table )
{
  auto j = read_json( path );
  auto config = runtime::binding_config_from_json( j );
  if ( j.value( "preset", std::string{} ) == "scripted-adventure" )
  {
    auto base = runtime::scripted_binding_config( table );
    for ( auto const& [k, v] : config.predicates )
      base.predicates[k] = v;
    for ( auto const& [k, v] : config.functions )
      base.functions[k] = v;
    if ( config.summarizer )
    {
      base.summarizer = config.summarizer;
      base.summary_cell = config.summary_cell;
    }
    for ( auto const& [k, v] : config.initial_cells )
      base.initial_cells[k] = v;
    base.llm = config.llm;
    base.scripted = config.scripted;
    config = std::move( base );
  }
  std::shared_ptr<runtime::ScriptedOracle> scripted;
  std::shared_ptr<runtime::ChatBackend> llm;
  if ( config.llm )
  {
    auto settings = *config.llm;
    if ( !settings.journal.empty() && fs::path( settings.journal ).is_relative() )
      settings.journal = ( fs::path( parent_dir( path ) ) / settings.journal ).string();
    llm = std::make_shared<runtime::ChatClient>( settings );
  }
  scripted = std::make_shared<world::AdventureWorld>( table, world::world_options_from_json( config.scripted ) );
  return runtime::bind_terms( table, config, scripted, llm );
}

std::string artifact_id( std::string const& path )
{
  auto name = fs::path( path ).filename().string();
  for ( std::string suffix : { ".automaton.json", ".json" } )
    if ( name.size() > suffix.size() && name.ends_with( suffix ) )
      return name.substr( 0, name.size() - suffix.size() );
  return name;
}

json nba_json( automata::Nba const& nba, synth::MealyMachine const& m, std::string const& formula )
{
  json states = json::array();
  for ( int s = 0; s < nba.num_states(); ++s )
  {
    json edges = json::array();
    for ( auto const& e : nba.out[static_cast<std::size_t>( s )] )
    {
      std::vector<std::pair<int, bool>> guard;
      for ( int p = 0; p < m.dict.size(); ++p )
      {
        if ( ( e.label.pos >> p ) & 1u )
          guard.push_back( { p, true } );
        if ( ( e.label.neg >> p ) & 1u )
          guard.push_back( { p, false } );
      }
      edges.push_back( { { "guard", codegen::guard_text( m, guard ) }, { "target", e.target } } );
    }
    states.push_back( { { "id", s }, { "accepting", nba.accepting[static_cast<std::size_t>( s )] != 0 }, { "edges", edges } } );
  }
  json props = json::array();
  for ( int p = 0; p < m.dict.num_inputs; ++p )
    props.push_back( { { "name", m.dict.name( p ) }, { "term", m.dict.props[static_cast<std::size_t>( p )].term } } );
  return { { "format", "tslagent-cause-automaton" },
           { "version", codegen::artifact_version },
           { "formula", formula },
           { "props", props },
           { "initial", nba.initial },
           { "states", states } };
}

causality::InputTrace trace_inputs( std::string const& path, synth::MealyMachine const& m, int game, int loop )
{
  std::istringstream lines( read_file( path ) );
  std::vector<ltl::Letter> letters;
  std::string line;
  int first_game = -1;
  while ( std::getline( lines, line ) )
  {
    if ( line.empty() )
      continue;
    auto j = json::parse( line );
    int g = j.value( "game", 0 );
    if ( first_game < 0 )
      first_game = g;
    if ( g != ( game < 0 ? first_game : game ) )
      continue;
    ltl::Letter l = 0;
    for ( auto const& [term, value] : j.at( "valuation" ).items() )
    {
      int p = m.dict.find_term( term );
      if ( p < 0 || p >= m.dict.num_inputs )
        throw std::invalid_argument( "trace predicate '" + term + "' is not an input of the artifact" );
      if ( value.get<bool>() )
        l |= ltl::Letter{ 1 } << p;
    }
    letters.push_back( l );
  }
  if ( letters.empty() )
    throw std::invalid_argument( "trace " + path + " has no turns for the selected game" );
  if ( loop < 1 || loop > static_cast<int>( letters.size() ) )
    throw std::invalid_argument( "--loop must lie in [1, " + std::to_string( letters.size() ) + "]" );
  auto split = letters.end() - loop;
  return { { letters.begin(), split }, { split, letters.end() } };
}

std::string letters_text( std::vector<ltl::Letter> const& word, ltl::PropDictionary const& dict )
{
  std::string out;
  for ( auto l : word )
  {
    std::string cell;
    for ( int p = 0; p < dict.num_inputs; ++p )
      if ( ( l >> p ) & 1u )
        cell += ( cell.empty() ? "" : ", " ) + dict.props[static_cast<std::size_t>( p )].term;
    out += "{" + cell + "} ";
  }
  if ( !out.empty() )
    out.pop_back();
  return out;
}

// ---------------------------------------------------------------------------

struct Args
{
  std::vector<std::string> specs;
  std::string artifact;
  std::string bindings;
  std::string output;
  std::string config;
  std::string trace;
  std::string effect;
  std::string cause_automaton;
  std::string persist;
  std::string host = "127.0.0.1";
  std::string serve_spec;
  bool js = false;
  bool graph = false;
  int max_states = 32;
  std::uint64_t seed = 0;
  int game = -1;
  int loop = 1;
  int max_stem = 8;
  int max_loop = 4;
  int port = 8080;
};

int cmd_synth( Args const& a, std::ostream& out, std::ostream& err )
{
  auto spec = load_spec( a.specs );
  synth::SynthesisOptions options;
  options.max_states = a.max_states;
  auto r = synth::synthesize( spec, options );
  if ( !r.realizable() )
  {
    err << ( r.definitive ? "unrealizable (definitive): " : "unrealizable (bound exhausted, inconclusive): " )
        << r.detail << '\n';
    return Unrealizable;
  }
  auto report = synth::verify_machine( *r.machine, spec );
  if ( !report.passed )
  {
    err << "verification failed for the synthesized machine\n";
    return VerificationFailed;
  }
  err << "realizable with " << r.states << " states" << ( r.minimal ? " (minimal)" : "" ) << ", verified over "
      << report.product_states << " product states\n";
  auto text = codegen::emit_json_text( *r.machine );
  if ( a.output.empty() )
    out << text;
  else
    write_file( a.output, text );
  return Ok;
}

int cmd_verify( Args const& a, std::ostream& out, std::ostream& err )
{
  auto m = load_artifact( a.artifact );
  auto spec = load_spec( a.specs );
  if ( !( m.dict == spec.dict ) )
  {
    err << "artifact propositions do not match the specification\n";
    return VerificationFailed;
  }
  auto report = synth::verify_machine( m, spec );
  if ( !report.passed )
  {
    err << "verification failed";
    if ( report.counterexample )
      err << ": inputs " << letters_text( report.counterexample->stem, m.dict ) << " then ("
          << letters_text( report.counterexample->loop, m.dict ) << ")^w";
    err << '\n';
    return VerificationFailed;
  }
  out << "verified: " << m.num_states() << " states, " << report.product_states << " product states\n";
  return Ok;
}

int cmd_codegen( Args const& a, std::ostream& out )
{
  auto m = load_artifact( a.artifact );
  if ( a.graph )
    out << codegen::graph( m ).dump( 2 ) << '\n';
  else
    out << codegen::emit_pseudocode( m, a.js ? codegen::Style::JavaScript : codegen::Style::Neutral );
  return Ok;
}

int cmd_play( Args const& a, std::istream& in, std::ostream& out )
{
  auto m = load_artifact( a.artifact );
  auto registry = load_bindings( a.bindings, m.signals );
  runtime::Session session( m, registry, a.seed );
  std::ofstream trace;
  if ( !a.trace.empty() )
  {
    trace.open( a.trace );
    if ( !trace )
      throw IoError( "cannot write " + a.trace );
  }
  out << "seed " << a.seed << ", " << m.num_states() << " states. Enter a choice per turn, empty line or EOF to stop.\n";
  std::string prompt;
  while ( out << "> " << std::flush, std::getline( in, prompt ) && !prompt.empty() )
  {
    auto t = session.step_turn( prompt );
    for ( auto const& [signal, update] : t.updates )
      out << update << '\n';
    for ( auto const& [signal, value] : t.generated )
      if ( !m.signals.written_cells.count( signal ) )
        out << runtime::text_of( value ) << '\n';
    if ( trace )
      trace << t.jsonl() << '\n' << std::flush;
    out << "(state " << t.state << " -> " << t.next_state << ")\n";
  }
  out << '\n';
  return Ok;
}

int cmd_eval( Args const& a, std::ostream& out )
{
  auto j = read_json( a.config );
  auto base = parent_dir( a.config );
  std::vector<monitor::ExperimentConfig> configs;
  if ( j.contains( "experiments" ) )
    for ( auto const& e : j.at( "experiments" ) )
      configs.push_back( monitor::experiment_from_json( e, base ) );
  else
    configs.push_back( monitor::experiment_from_json( j, base ) );
  for ( auto const& c : configs )
    for ( auto const& s : c.specs )
      read_file( s );

  std::vector<monitor::AdherenceReport> reports;
  for ( auto const& c : configs )
    reports.push_back( monitor::run_experiment( c ) );
  json doc;
  if ( reports.size() == 1 && !j.contains( "experiments" ) )
    doc = reports.front().to_json();
  else
  {
    doc["reports"] = json::array();
    for ( auto const& r : reports )
      doc["reports"].push_back( r.to_json() );
  }
  if ( !a.output.empty() )
    write_file( a.output, doc.dump( 2 ) + "\n" );
  out << monitor::render_table( reports );
  return Ok;
}

int cmd_explain( Args const& a, std::ostream& out, std::ostream& err )
{
  auto m = load_artifact( a.artifact );
  auto trace = trace_inputs( a.trace, m, a.game, a.loop );
  auto effect = ltl::abstract_formula( spec::desugar( spec::parse_formula( a.effect ) ), m.dict );
  causality::CauseOptions options{ a.max_stem, a.max_loop };
  auto r = causality::synthesize_cause( m, trace, effect, options );
  out << "trace: " << letters_text( trace.stem, m.dict ) << " then (" << letters_text( trace.loop, m.dict ) << ")^w\n";
  out << "effect: " << causality::formula_text( effect, m.dict ) << '\n';
  if ( !r.cause )
  {
    err << r.note << '\n';
    out << "cause: none\n";
    return Failure;
  }
  out << "cause: " << r.cause->text << '\n';
  if ( !r.note.empty() )
    out << "note: " << r.note << '\n';
  out << "certified candidates: " << r.certified.size() << '\n';
  if ( !a.cause_automaton.empty() )
  {
    auto nba = automata::ltl_to_nba( ltl::to_nnf( r.cause->formula ) );
    write_file( a.cause_automaton, nba_json( nba, m, r.cause->text ).dump( 2 ) + "\n" );
  }
  return Ok;
}

int cmd_serve( Args const& a, std::ostream& out )
{
  auto m = load_artifact( a.artifact );
  serve::Artifact artifact{ m, load_bindings( a.bindings, m.signals ), std::nullopt };
  if ( !a.serve_spec.empty() )
  {
    artifact.spec = load_spec( { a.serve_spec } );
    if ( !( artifact.spec->dict == m.dict ) )
      throw std::invalid_argument( "--spec does not match the artifact" );
  }
  serve::Service service( a.persist );
  auto id = artifact_id( a.artifact );
  service.add_artifact( id, std::move( artifact ) );
  httplib::Server server;
  service.mount( server );
  if ( !server.bind_to_port( a.host, a.port ) )
    throw IoError( "cannot listen on " + a.host + ":" + std::to_string( a.port ) );
  out << "serving artifact '" << id << "' on http://" << a.host << ":" << a.port << '\n' << std::flush;
  server.listen_after_bind();
  return Ok;
}

} // namespace

int run( std::vector<std::string> const& args, std::istream& in, std::ostream& out, std::ostream& err )
{
  CLI::App app{ "TSL specifications to Mealy machines and automaton-guided story agents", "tslagent" };
  app.require_subcommand( 1 );
  Args a;

  auto* synth = app.add_subcommand( "synth", "Synthesize, verify and emit an automaton artifact" );
  synth->add_option( "specs", a.specs, "TSL files, composed in order" )->required();
  synth->add_option( "-o,--output", a.output, "Artifact path (stdout if omitted)" );
  synth->add_option( "--max-states", a.max_states, "State bound" )->check( CLI::PositiveNumber );

  auto* verify = app.add_subcommand( "verify", "Model check an artifact against a specification" );
  verify->add_option( "artifact", a.artifact )->required();
  verify->add_option( "specs", a.specs )->required();

  auto* codegen = app.add_subcommand( "codegen", "Print an artifact as pseudocode" );
  codegen->add_option( "artifact", a.artifact )->required();
  codegen->add_flag( "--js", a.js, "JavaScript-flavoured pseudocode" );
  codegen->add_flag( "--graph", a.graph, "Node/edge JSON instead of pseudocode" );

  auto* play = app.add_subcommand( "play", "Interactive game in the terminal" );
  play->add_option( "artifact", a.artifact )->required();
  play->add_option( "bindings", a.bindings )->required();
  play->add_option( "--seed", a.seed );
  play->add_option( "--trace", a.trace, "Write turn JSONL here" );

  auto* eval = app.add_subcommand( "eval", "Run adherence experiments" );
  eval->add_option( "config", a.config )->required();
  eval->add_option( "-o,--output", a.output, "Report JSON path" );

  auto* explain = app.add_subcommand( "explain", "Weakest template cause of an effect on a trace" );
  explain->add_option( "artifact", a.artifact )->required();
  explain->add_option( "trace", a.trace, "Turn JSONL" )->required();
  explain->add_option( "--effect", a.effect, "Effect formula over update terms" )->required();
  explain->add_option( "--loop", a.loop, "Trailing turns repeated forever" );
  explain->add_option( "--game", a.game, "Game index in a multi-game trace" );
  explain->add_option( "--max-stem", a.max_stem );
  explain->add_option( "--max-loop", a.max_loop );
  explain->add_option( "--automaton", a.cause_automaton, "Write the cause automaton JSON here" );

  auto* serve = app.add_subcommand( "serve", "HTTP API for interactive clients" );
  serve->add_option( "artifact", a.artifact )->required();
  serve->add_option( "bindings", a.bindings )->required();
  serve->add_option( "--port", a.port );
  serve->add_option( "--host", a.host );
  serve->add_option( "--spec", a.serve_spec, "Specification for live conjunct verdicts" );
  serve->add_option( "--persist", a.persist, "Directory for per-session turn JSONL" );

  try
  {
    std::vector<std::string> reversed( args.rbegin(), args.rend() );
    app.parse( reversed );
  }
  catch ( CLI::CallForHelp const& e )
  {
    return app.exit( e, out, err );
  }
  catch ( CLI::CallForAllHelp const& e )
  {
    return app.exit( e, out, err );
  }
  catch ( CLI::ParseError const& e )
  {
    app.exit( e, out, err );
    return ParseError;
  }

  try
  {
    if ( synth->parsed() )
      return cmd_synth( a, out, err );
    if ( verify->parsed() )
      return cmd_verify( a, out, err );
    if ( codegen->parsed() )
      return cmd_codegen( a, out );
    if ( play->parsed() )
      return cmd_play( a, in, out );
    if ( eval->parsed() )
      return cmd_eval( a, out );
    if ( explain->parsed() )
      return cmd_explain( a, out, err );
    return cmd_serve( a, out );
  }
  catch ( IoError const& e )
  {
    err << "error: " << e.what() << '\n';
    return IoFailure;
  }
  catch ( runtime::OracleError const& e )
  {
    err << "oracle error: " << e.what() << '\n';
    return OracleFailure;
  }
  catch ( Diagnosed const& e )
  {
    err << e.what() << '\n';
    return ParseError;
  }
  catch ( spec::SpecError const& e )
  {
    err << "parse error: " << e.what() << '\n';
    return ParseError;
  }
  catch ( codegen::ArtifactError const& e )
  {
    err << "artifact error: " << e.what() << '\n';
    return ParseError;
  }
  catch ( runtime::BindingError const& e )
  {
    err << "binding error: " << e.what() << '\n';
    return ParseError;
  }
  catch ( json::exception const& e )
  {
    err << "parse error: " << e.what() << '\n';
    return ParseError;
  }
  catch ( std::invalid_argument const& e )
  {
    err << "error: " << e.what() << '\n';
    return ParseError;
  }
  catch ( causality::CauseError const& e )
  {
    err << "explain: " << e.what() << '\n';
    return Failure;
  }
  catch ( std::exception const& e )
  {
    err << "error: " << e.what() << '\n';
    return Failure;
  }
}

} // namespace tslagent::cli
