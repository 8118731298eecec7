#include <tslagent/codegen.hpp>
#include <tslagent/monitor.hpp>
#include <tslagent/world.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace tslagent::monitor {

namespace {

std::string resolve( std::string const& path, std::string const& base_dir )
{
  if ( path.empty() || base_dir.empty() || std::filesystem::path( path ).is_absolute() )
    return path;
  return ( std::filesystem::path( base_dir ) / path ).lexically_normal().string();
}

std::string read_file( std::string const& path )
{
  std::ifstream in( path );
  if ( !in )
    throw std::runtime_error( "cannot read " + path );
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::uint64_t game_seed( std::uint64_t seed, int game )
{
  std::seed_seq seq{ static_cast<std::uint32_t>( seed ), static_cast<std::uint32_t>( seed >> 32 ),
                     static_cast<std::uint32_t>( game ) };
  std::uint32_t words[2];
  seq.generate( words, words + 2 );
  return ( std::uint64_t{ words[0] } << 32 ) | words[1];
}

std::string pad( std::string s, std::size_t width )
{
  if ( s.size() < width )
    s.append( width - s.size(), ' ' );
  return s;
}

std::string render_rows( std::vector<std::string> const& header, std::vector<std::vector<std::string>> const& rows )
{
  std::vector<std::size_t> width( header.size() );
  for ( std::size_t c = 0; c < header.size(); ++c )
  {
    width[c] = header[c].size();
    for ( auto const& r : rows )
      width[c] = std::max( width[c], r[c].size() );
  }
  auto line = [&]( std::vector<std::string> const& cells ) {
    std::string out;
    for ( std::size_t c = 0; c < cells.size(); ++c )
      out += ( c ? " | " : "" ) + ( c + 1 == cells.size() ? cells[c] : pad( cells[c], width[c] ) );
    return out + "\n";
  };
  std::string out = line( header );
  std::string rule;
  for ( std::size_t c = 0; c < header.size(); ++c )
    rule += ( c ? "-+-" : "" ) + std::string( width[c], '-' );
  out += rule + "\n";
  for ( auto const& r : rows )
    out += line( r );
  return out;
}

} // namespace

ExperimentConfig experiment_from_json( json const& j, std::string const& base_dir )
{
  ExperimentConfig c;
  c.task = j.value( "task", c.task );
  for ( auto const& s : j.value( "specs", std::vector<std::string>{} ) )
    c.specs.push_back( resolve( s, base_dir ) );
  c.artifact = resolve( j.value( "artifact", std::string{} ), base_dir );
  c.agent = j.value( "agent", c.agent );
  c.games = j.value( "games", c.games );
  c.turns = j.value( "turns", c.turns );
  c.seed = j.value( "seed", c.seed );
  c.p_halluc = j.value( "p_halluc", c.p_halluc );
  c.p_arith = j.value( "p_arith", c.p_arith );
  c.max_states = j.value( "max_states", c.max_states );
  c.trace = resolve( j.value( "trace", std::string{} ), base_dir );
  if ( c.specs.empty() )
    throw std::invalid_argument( "experiment needs at least one spec" );
  if ( c.agent != "automaton" && c.agent != "pure-llm-mock" )
    throw std::invalid_argument( "agent must be automaton or pure-llm-mock, got '" + c.agent + "'" );
  if ( c.games < 1 || c.turns < 1 )
    throw std::invalid_argument( "games and turns must be positive" );
  for ( double p : { c.p_halluc, c.p_arith } )
    if ( p < 0.0 || p > 1.0 )
      throw std::invalid_argument( "fault rates must lie in [0, 1]" );
  return c;
}

std::string AdherenceReport::percent( int part, int whole )
{
  if ( whole <= 0 )
    return "0.0";
  long tenths = ( 2L * 1000 * part + whole ) / ( 2L * whole );
  return std::to_string( tenths / 10 ) + "." + std::to_string( tenths % 10 );
}

json AdherenceReport::to_json() const
{
  json j = { { "task", task },
             { "method", method },
             { "states", states },
             { "games", games },
             { "turns", turns },
             { "adhering", adhering },
             { "adherence_percent", adherence_percent() },
             { "hallucination_games", hallucination_games },
             { "arithmetic_games", arithmetic_games },
             { "procedural_games", procedural_games } };
  j["records"] = json::array();
  for ( auto const& r : records )
    j["records"].push_back( { { "game", r.game },
                              { "violating", r.violating },
                              { "first_violation", r.first_violation },
                              { "hallucination", r.hallucination },
                              { "arithmetic", r.arithmetic },
                              { "procedural", r.procedural },
                              { "violated", r.violated } } );
  return j;
}

std::vector<std::string> user_prompts( std::uint64_t seed, int turns )
{
  std::mt19937_64 rng( seed ^ 0x5eedull );
  std::vector<std::string> out;
  for ( int k = 0; k < turns; ++k )
    out.push_back( std::bernoulli_distribution( 0.5 )( rng ) ? "I take the safe path." : "I take the risky path." );
  return out;
}

AdherenceReport run_experiment( ExperimentConfig const& config )
{
  std::vector<spec::SpecAst> parts;
  for ( auto const& path : config.specs )
    parts.push_back( spec::parse_spec( read_file( path ) ) );
  auto spec = ltl::abstract_to_ltl( spec::compile_spec( spec::compose( parts ) ) );
  if ( !config.artifact.empty() )
  {
    auto machine = codegen::parse_artifact_text( read_file( config.artifact ) );
    if ( !( machine.dict == spec.dict ) )
      throw std::invalid_argument( "artifact " + config.artifact + " does not match the specification" );
    return run_experiment( config, spec, machine );
  }
  synth::SynthesisOptions options;
  options.max_states = config.max_states;
  auto r = synth::synthesize( spec, options );
  if ( !r.realizable() )
    throw std::invalid_argument( "specification for " + config.task + " is not realizable: " + r.detail );
  return run_experiment( config, spec, *r.machine );
}

AdherenceReport run_experiment( ExperimentConfig const& config, ltl::LtlSpec const& spec,
                                synth::MealyMachine const& machine )
{
  bool mock = config.agent == "pure-llm-mock";
  AdherenceReport report;
  report.task = config.task;
  report.method = config.agent;
  report.states = mock ? 0 : machine.num_states();
  report.games = config.games;
  report.turns = config.turns;

  world::WorldOptions options;
  options.p_halluc = config.p_halluc;
  options.style = mock ? world::FaultStyle::Detectable : world::FaultStyle::RandomOther;
  auto world = std::make_shared<world::AdventureWorld>( spec.signals, options );
  auto registry = runtime::bind_terms( spec.signals, runtime::scripted_binding_config( spec.signals ), world );

  std::ofstream trace;
  if ( !config.trace.empty() )
  {
    trace.open( config.trace );
    if ( !trace )
      throw std::runtime_error( "cannot write " + config.trace );
  }

  for ( int g = 0; g < config.games; ++g )
  {
    auto seed = game_seed( config.seed, g );
    runtime::Session session( machine, registry, seed );
    if ( mock && config.p_arith > 0.0 )
    {
      // a counter update may be swapped for another alternative of its group
      session.set_output_hook( [&spec, p = config.p_arith]( Letter, Letter outputs, runtime::CallContext const& ctx ) {
        for ( auto const& group : spec.dict.groups )
        {
          if ( !spec.signals.written_cells.count( group.signal ) || group.alternatives.size() < 2 )
            continue;
          auto rng = world::call_rng( ctx, "arith:" + group.signal );
          if ( !std::bernoulli_distribution( p )( rng ) )
            continue;
          std::vector<int> others;
          for ( int a : group.alternatives )
            if ( !( ( outputs >> a ) & 1u ) )
              others.push_back( a );
          for ( int a : group.alternatives )
            outputs &= ~( Letter{ 1 } << a );
          outputs |= Letter{ 1 } << others[std::uniform_int_distribution<std::size_t>( 0, others.size() - 1 )( rng )];
        }
        return outputs;
      } );
    }

    SpecMonitor monitor( spec );
    for ( auto const& prompt : user_prompts( seed, config.turns ) )
    {
      auto t = session.step_turn( prompt );
      monitor.observe_turn( t );
      if ( trace )
      {
        auto line = t.to_json();
        line["game"] = g;
        trace << line.dump() << '\n';
      }
    }
    monitor.observe_inputs( session.evaluate_inputs( "" ) );

    GameRecord record;
    record.game = g;
    record.violating = monitor.violated();
    record.first_violation = monitor.first_violation();
    record.hallucination = monitor.violated( ViolationClass::Hallucination );
    record.arithmetic = monitor.violated( ViolationClass::Arithmetic );
    record.procedural = monitor.violated( ViolationClass::Procedural );
    for ( std::size_t k = 0; k < monitor.conjuncts().size(); ++k )
      if ( monitor.status()[k].verdict == Verdict::Violated )
        record.violated.push_back( monitor.conjuncts()[k].text );
    report.adhering += record.violating ? 0 : 1;
    report.hallucination_games += record.hallucination ? 1 : 0;
    report.arithmetic_games += record.arithmetic ? 1 : 0;
    report.procedural_games += record.procedural ? 1 : 0;
    report.records.push_back( std::move( record ) );
  }
  return report;
}

std::string render_table( std::vector<AdherenceReport> const& reports )
{
  std::vector<std::vector<std::string>> rows;
  for ( auto const& r : reports )
    rows.push_back( { r.task, r.method, r.states ? std::to_string( r.states ) : "-", r.adherence_percent() } );
  return render_rows( { "Task", "Method", "States", "Adherence %" }, rows );
}

std::string render_error_table( std::vector<AdherenceReport> const& reports )
{
  std::vector<std::vector<std::string>> rows;
  for ( auto const& r : reports )
    rows.push_back( { r.task, r.method, std::to_string( r.hallucination_games ), std::to_string( r.arithmetic_games ) } );
  return render_rows( { "Task", "Method", "Hallucinations", "Arithmetic errors" }, rows );
}

} // namespace tslagent::monitor
