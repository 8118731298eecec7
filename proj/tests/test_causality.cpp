#include "support.hpp"

#include <tslagent/causality.hpp>

#include <doctest.h>

using namespace tslagent;
using causality::InputTrace;
using ltl::Letter;
using ltl::Ltl;
using testing_support::Rng;
using testing_support::uniform;

namespace {

struct Fixture
{
  ltl::LtlSpec spec;
  synth::MealyMachine machine;
};

Fixture const& adventure()
{
  static Fixture const f = [] {
    auto spec = ltl::abstract_to_ltl( spec::compile_spec( testing_support::load_spec( "adventure.tsl" ) ) );
    return Fixture{ spec, *synth::synthesize( spec ).machine };
  }();
  return f;
}

Ltl atom( ltl::LtlSpec const& spec, std::string const& term )
{
  auto p = spec.dict.find_term( term );
  REQUIRE( p >= 0 );
  return Ltl::atom( p );
}

/// Joint word by direct simulation: unroll the loop until the state at a
/// loop boundary repeats.
ltl::Lasso simulate( synth::MealyMachine const& m, std::vector<Letter> const& stem, std::vector<Letter> const& loop )
{
  ltl::Lasso out;
  int q = 0;
  for ( auto in : stem )
  {
    out.stem.push_back( in | m.step( q, in ).outputs );
    q = m.step( q, in ).next;
  }
  std::vector<int> starts;
  std::vector<Letter> unrolled;
  while ( std::find( starts.begin(), starts.end(), q ) == starts.end() )
  {
    starts.push_back( q );
    for ( auto in : loop )
    {
      unrolled.push_back( in | m.step( q, in ).outputs );
      q = m.step( q, in ).next;
    }
  }
  auto first = static_cast<std::size_t>( std::find( starts.begin(), starts.end(), q ) - starts.begin() ) * loop.size();
  out.stem.insert( out.stem.end(), unrolled.begin(), unrolled.begin() + static_cast<std::ptrdiff_t>( first ) );
  out.loop.assign( unrolled.begin() + static_cast<std::ptrdiff_t>( first ), unrolled.end() );
  return out;
}

std::vector<std::vector<Letter>> words( Letter letters, int min_length, int max_length )
{
  std::vector<std::vector<Letter>> out;
  std::vector<std::vector<Letter>> layer{ {} };
  for ( int length = 0; length <= max_length; ++length )
  {
    if ( length >= min_length )
      out.insert( out.end(), layer.begin(), layer.end() );
    std::vector<std::vector<Letter>> next;
    for ( auto const& w : layer )
      for ( Letter l = 0; l < letters; ++l )
      {
        next.push_back( w );
        next.back().push_back( l );
      }
    layer = std::move( next );
  }
  return out;
}

/// Deviations within the bounds whose joint word satisfies the effect.
std::vector<ltl::Lasso> effect_deviations( synth::MealyMachine const& m, Ltl const& effect, int max_stem, int max_loop )
{
  std::vector<ltl::Lasso> out;
  auto letters = Letter{ 1 } << m.dict.num_inputs;
  auto stems = words( letters, 0, max_stem );
  auto loops = words( letters, 1, max_loop );
  for ( auto const& s : stems )
    for ( auto const& l : loops )
      if ( ltl::evaluate( effect, simulate( m, s, l ) ) )
        out.push_back( { s, l } );
  return out;
}

bool brute_force_valid( std::vector<ltl::Lasso> const& deviations, Ltl const& cause )
{
  for ( auto const& d : deviations )
    if ( !ltl::evaluate( cause, d ) )
      return false;
  return true;
}

synth::MealyMachine random_machine( Rng& rng, ltl::LtlSpec const& spec, int states )
{
  synth::MealyMachine m;
  m.dict = spec.dict;
  m.signals = spec.signals;
  m.states.resize( static_cast<std::size_t>( states ) );
  for ( auto& row : m.states )
    for ( std::size_t v = 0; v < m.num_valuations(); ++v )
    {
      Letter out = 0;
      for ( auto const& g : spec.dict.groups )
        out |= Letter{ 1 } << g.alternatives[static_cast<std::size_t>(
                   uniform( rng, 0, static_cast<int>( g.alternatives.size() ) - 1 ) )];
      row.push_back( { out, uniform( rng, 0, states - 1 ) } );
    }
  return m;
}

} // namespace

TEST_CASE( "market-free trace on the adventure machine" )
{
  auto const& f = adventure();
  auto effect = Ltl::globally( !atom( f.spec, "[storyPassage <- toCave(s)]" ) );
  auto cause = Ltl::globally( !atom( f.spec, "inMarket(s)" ) );
  InputTrace trace{ {}, { 0 } };
  auto word = causality::joint_word( f.machine, trace );
  CHECK( ltl::evaluate( Ltl::globally( atom( f.spec, "[storyPassage <- toMarket(s)]" ) ), word ) );

  auto v = causality::check_cause( f.machine, trace, effect, cause );
  CHECK( v.holds_on_trace );
  if ( v.witness )
  {
    // the machine leaves a deviation that visits the market without any
    // cave update, so the but-for test cannot pass
    ltl::Lasso inputs{ v.witness->stem, v.witness->loop };
    CHECK_FALSE( ltl::evaluate( cause, inputs ) );
    CHECK( ltl::evaluate( effect, simulate( f.machine, v.witness->stem, v.witness->loop ) ) );
  }

  SUBCASE( "true is vacuously certified" )
  {
    auto t = causality::check_cause( f.machine, trace, effect, Ltl::constant( true ) );
    CHECK( t.certified() );
    CHECK_FALSE( t.witness );
  }
  SUBCASE( "avoiding the cave is not a cause" )
  {
    auto c = causality::check_cause( f.machine, trace, effect, Ltl::globally( !atom( f.spec, "inCave(s)" ) ) );
    CHECK( c.holds_on_trace );
    CHECK_FALSE( c.counterfactual_valid );
    REQUIRE( c.witness );
    ltl::Lasso inputs{ c.witness->stem, c.witness->loop };
    CHECK( ltl::evaluate( Ltl::finally( atom( f.spec, "inCave(s)" ) ), inputs ) );
    CHECK( ltl::evaluate( effect, simulate( f.machine, c.witness->stem, c.witness->loop ) ) );
  }
}

TEST_CASE( "checker agrees with brute-force deviations on every template" )
{
  auto const& f = adventure();
  auto effect = Ltl::globally( !atom( f.spec, "[storyPassage <- toCave(s)]" ) );
  InputTrace trace{ {}, { 0 } };
  causality::CauseOptions small{ 4, 3 };
  auto deviations = effect_deviations( f.machine, effect, 4, 3 );
  REQUIRE_FALSE( deviations.empty() );
  int certified = 0;
  for ( auto const& c : causality::cause_templates( f.machine.dict ) )
  {
    CAPTURE( c.text );
    auto v = causality::check_cause( f.machine, trace, effect, c.formula, small );
    CHECK( v.counterfactual_valid == brute_force_valid( deviations, c.formula ) );
    certified += v.certified() ? 1 : 0;
  }
  CHECK( certified > 0 );
}

TEST_CASE( "templates" )
{
  auto const& dict = adventure().machine.dict;
  auto t = causality::cause_templates( dict );
  // 6 literals: G, F, U and W over distinct atoms, X^1..X^3
  CHECK( t.size() == 6u + 6u + 24u + 24u + 18u );
  CHECK( t.front().text == "G inCave(s)" );
  for ( auto const& c : t )
  {
    CHECK( ( c.formula.props() & dict.output_mask() ) == 0u );
    CHECK( automata::satisfiable( !c.formula ) );
  }
}

TEST_CASE( "input-independent effects fall back to true" )
{
  auto const& f = adventure();
  synth::MealyMachine m = f.machine;
  auto town = Letter{ 1 } << f.spec.dict.find_term( "[storyPassage <- toTown(s)]" );
  m.states.assign( 1, std::vector<synth::Transition>( m.num_valuations(), { town, 0 } ) );
  InputTrace trace{ { 1 }, { 2, 0 } };

  auto r = causality::synthesize_cause( m, trace, Ltl::globally( atom( f.spec, "[storyPassage <- toTown(s)]" ) ) );
  REQUIRE( r.cause );
  CHECK( r.cause->text == "true" );
  CHECK( r.note.find( "input-independent" ) != std::string::npos );
  CHECK( r.certified.empty() );

  auto t = causality::synthesize_cause( f.machine, trace, Ltl::constant( true ) );
  REQUIRE( t.cause );
  CHECK( t.cause->text == "true" );
}

TEST_CASE( "cause errors" )
{
  auto const& f = adventure();
  auto cave = atom( f.spec, "[storyPassage <- toCave(s)]" );
  InputTrace trace{ {}, { 0 } };
  auto kind_of = [&]( auto&& fn ) {
    try
    {
      fn();
    }
    catch ( causality::CauseError const& e )
    {
      return static_cast<int>( e.kind() );
    }
    return -1;
  };
  CHECK( kind_of( [&] { causality::check_cause( f.machine, trace, Ltl::finally( cave ), Ltl::constant( true ) ); } ) ==
         static_cast<int>( causality::CauseError::Kind::EffectNotOnTrace ) );
  InputTrace long_trace{ std::vector<Letter>( 9, 0 ), { 0 } };
  CHECK( kind_of( [&] { causality::check_cause( f.machine, long_trace, !cave, Ltl::constant( true ) ); } ) ==
         static_cast<int>( causality::CauseError::Kind::BoundTooSmall ) );
  CHECK( kind_of( [&] { causality::check_cause( f.machine, trace, Ltl::globally( !cave ), cave ); } ) ==
         static_cast<int>( causality::CauseError::Kind::WrongProps ) );
  CHECK( kind_of( [&] {
           causality::check_cause( f.machine, trace, atom( f.spec, "inCave(s)" ), Ltl::constant( true ) );
         } ) == static_cast<int>( causality::CauseError::Kind::WrongProps ) );
  CHECK( kind_of( [&] { causality::check_cause( f.machine, InputTrace{ {}, {} }, !cave, Ltl::constant( true ) ); } ) ==
         static_cast<int>( causality::CauseError::Kind::BadTrace ) );
}

TEST_CASE( "certified causes pass the but-for test on random machines" )
{
  auto spec = ltl::abstract_to_ltl(
      spec::compile_spec( "always guarantee { a(x) -> [o <- f(x)]; b(x) -> [o <- g(x)]; }" ) );
  REQUIRE( spec.dict.num_inputs == 2 );
  Rng rng( 8080 );
  auto f_atom = Ltl::atom( spec.dict.find_term( "[o <- f(x)]" ) );
  std::vector<Ltl> effects = { Ltl::globally( !f_atom ), Ltl::finally( f_atom ), Ltl::next( f_atom ),
                               Ltl::globally( Ltl::finally( f_atom ) ), Ltl::weak_until( !f_atom, Ltl::next( f_atom ) ) };
  causality::CauseOptions small{ 4, 3 };
  auto templates = causality::cause_templates( spec.dict );
  int checked = 0;
  for ( int n = 0; n < 12; ++n )
  {
    auto m = random_machine( rng, spec, uniform( rng, 1, 10 ) );
    for ( auto const& effect : effects )
    {
      InputTrace trace{ { static_cast<Letter>( uniform( rng, 0, 3 ) ) }, { static_cast<Letter>( uniform( rng, 0, 3 ) ) } };
      if ( !ltl::evaluate( effect, causality::joint_word( m, trace ) ) )
        continue;
      auto deviations = effect_deviations( m, effect, 4, 3 );
      std::vector<bool> certified;
      for ( auto const& c : templates )
      {
        auto v = causality::check_cause( m, trace, effect, c.formula, small );
        CAPTURE( c.text );
        REQUIRE( v.counterfactual_valid == brute_force_valid( deviations, c.formula ) );
        if ( v.witness )
        {
          CHECK_FALSE( ltl::evaluate( c.formula, ltl::Lasso{ v.witness->stem, v.witness->loop } ) );
          CHECK( ltl::evaluate( effect, simulate( m, v.witness->stem, v.witness->loop ) ) );
        }
        certified.push_back( v.certified() );
        ++checked;
      }
      // weaker candidates that hold on the trace stay certified
      ltl::Lasso inputs{ trace.stem, trace.loop };
      for ( std::size_t a = 0; a < templates.size(); ++a )
        for ( std::size_t b = 0; b < templates.size(); ++b )
          if ( certified[a] && ltl::evaluate( templates[b].formula, inputs ) &&
               automata::implies( templates[a].formula, templates[b].formula ) )
            CHECK( certified[b] );
    }
  }
  CHECK( checked > 0 );
}
