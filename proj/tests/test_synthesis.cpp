#include "support.hpp"

#include <tslagent/synthesis.hpp>

#include <doctest.h>

using namespace tslagent;
using ltl::Ltl;
using testing_support::Rng;
using testing_support::uniform;

namespace {

ltl::LtlSpec abstract_text( std::string const& text )
{
  return ltl::abstract_to_ltl( spec::compile_spec( text ) );
}

ltl::LtlSpec abstract_files( std::vector<std::string> const& names )
{
  std::vector<spec::SpecAst> parts;
  for ( auto const& n : names )
    parts.push_back( testing_support::load_spec( n ) );
  return ltl::abstract_to_ltl( spec::compile_spec( spec::compose( parts ) ) );
}

Ltl conjunction( std::vector<ltl::Conjunct> const& parts )
{
  Ltl acc = Ltl::constant( true );
  for ( auto const& c : parts )
    acc = acc && c.formula;
  return acc;
}

synth::MealyMachine constant_machine( ltl::LtlSpec const& spec, std::string const& term )
{
  synth::MealyMachine m;
  m.dict = spec.dict;
  m.signals = spec.signals;
  auto prop = spec.dict.find_term( term );
  REQUIRE( prop >= 0 );
  m.states.assign( 1, std::vector<synth::Transition>( m.num_valuations(), { ltl::Letter{ 1 } << prop, 0 } ) );
  return m;
}

} // namespace

TEST_CASE( "forced update needs one state" )
{
  auto spec = abstract_text( "always guarantee { [x <- f()]; }" );
  auto r = synth::synthesize( spec );
  REQUIRE( r.realizable() );
  CHECK( r.states == 1 );
  CHECK( r.minimal );
  CHECK( synth::verify_machine( *r.machine, spec ).passed );
}

TEST_CASE( "adventure is realizable within ten states and verifies" )
{
  auto spec = abstract_files( { "adventure.tsl" } );
  auto r = synth::synthesize( spec );
  REQUIRE( r.realizable() );
  CHECK( r.states <= 10 );
  r.machine->validate();
  auto report = synth::verify_machine( *r.machine, spec );
  CHECK( report.passed );
  CHECK_FALSE( report.counterexample );

  SUBCASE( "deterministic" )
  {
    auto again = synth::synthesize( spec );
    CHECK( *again.machine == *r.machine );
  }
  SUBCASE( "one more state still suffices" )
  {
    synth::SynthesisOptions tight;
    tight.max_states = r.states;
    auto exact = synth::synthesize( spec, tight );
    REQUIRE( exact.realizable() );
    tight.max_states = r.states + 1;
    auto looser = synth::synthesize( spec, tight );
    REQUIRE( looser.realizable() );
    CHECK( looser.states <= r.states + 1 );
    CHECK( synth::verify_machine( *looser.machine, spec ).passed );
  }
  SUBCASE( "first move goes to the market" )
  {
    auto market = spec.dict.find_term( "[storyPassage <- toMarket(s)]" );
    CHECK( r.machine->step( 0, 0 ).outputs == ( ltl::Letter{ 1 } << market ) );
  }
}

TEST_CASE( "always going to the cave violates the market guarantee" )
{
  auto spec = abstract_files( { "adventure.tsl" } );
  auto m = constant_machine( spec, "[storyPassage <- toCave(s)]" );
  auto assume = conjunction( spec.assumptions );
  auto market_first = spec.guarantees[0].formula;
  CHECK( spec.guarantees[0].text.find( "inMarket" ) != std::string::npos );
  auto report = synth::verify_machine( m, Ltl::implies( assume, market_first ) );
  REQUIRE_FALSE( report.passed );
  REQUIRE( report.counterexample );
  auto const& cex = *report.counterexample;
  CHECK( ltl::evaluate( assume, cex.word ) );
  CHECK_FALSE( ltl::evaluate( market_first, cex.word ) );
  CHECK_FALSE( ltl::evaluate( spec.formula, cex.word ) );
  CHECK_FALSE( synth::verify_machine( m, spec ).passed );
}

TEST_CASE( "any machine satisfies true" )
{
  auto spec = abstract_files( { "adventure.tsl" } );
  auto m = constant_machine( spec, "[storyPassage <- toTown(s)]" );
  CHECK( synth::verify_machine( m, Ltl::constant( true ) ).passed );
}

TEST_CASE( "contradiction is definitively unrealizable" )
{
  auto spec = abstract_files( { "contradiction.tsl" } );
  auto r = synth::synthesize( spec );
  CHECK_FALSE( r.realizable() );
  CHECK( r.definitive );
  CHECK_FALSE( r.machine );
}

TEST_CASE( "unrealizable without initial assumptions is bound-exhausted" )
{
  auto spec = abstract_files( { "fig2.tsl" } );
  synth::SynthesisOptions options;
  options.max_bound = 1;
  auto r = synth::synthesize( spec, options );
  CHECK_FALSE( r.realizable() );
  CHECK_FALSE( r.definitive );
}

TEST_CASE( "minimize merges equivalent states" )
{
  auto spec = abstract_files( { "forest.tsl" } );
  synth::MealyMachine m;
  m.dict = spec.dict;
  m.signals = spec.signals;
  auto forest = ltl::Letter{ 1 } << spec.dict.find_term( "[storyPassage <- toForest(s)]" );
  m.states = { { { forest, 1 } }, { { forest, 2 } }, { { forest, 0 } } };
  auto small = synth::minimize( m );
  CHECK( small.num_states() == 1 );
  CHECK( small.run( { 0, 0, 0, 0 } ) == m.run( { 0, 0, 0, 0 } ) );
}

TEST_CASE( "realizable results pass the verifier on random specs" )
{
  Rng rng( 424242 );
  static char const* const atoms[] = { "a(s)", "b(s)", "[o <- f(s)]", "[o <- g(s)]", "[c <- h(c)]" };
  static char const* const unary[] = { "G ", "F ", "X ", "! " };
  static char const* const binary[] = { " && ", " || ", " U ", " W ", " -> " };
  auto formula = [&]( auto&& self, int depth ) -> std::string {
    if ( depth == 0 || uniform( rng, 0, 2 ) == 0 )
      return atoms[uniform( rng, 0, 4 )];
    if ( uniform( rng, 0, 1 ) == 0 )
      return std::string( unary[uniform( rng, 0, 3 )] ) + "(" + self( self, depth - 1 ) + ")";
    return "(" + self( self, depth - 1 ) + binary[uniform( rng, 0, 4 )] + self( self, depth - 1 ) + ")";
  };
  int realizable = 0;
  int unrealizable = 0;
  for ( int n = 0; n < 40; ++n )
  {
    std::string text = "always assume { " + formula( formula, 2 ) + "; }\nguarantee { " + formula( formula, 2 ) +
                       "; }\nalways guarantee { " + formula( formula, 2 ) + "; }\n";
    CAPTURE( text );
    ltl::LtlSpec spec;
    try
    {
      spec = abstract_text( text );
    }
    catch ( spec::SpecError const& )
    {
      continue;
    }
    synth::SynthesisOptions options;
    options.max_states = 4;
    options.max_bound = 2;
    options.search_budget = 20000;
    auto r = synth::synthesize( spec, options );
    if ( r.realizable() )
    {
      ++realizable;
      REQUIRE( r.states <= 4 );
      r.machine->validate();
      REQUIRE( synth::verify_machine( *r.machine, spec ).passed );
    }
    else
    {
      ++unrealizable;
      if ( r.definitive )
        CHECK_FALSE( automata::satisfiable( spec.formula ) );
    }
  }
  CHECK( realizable > 0 );
  MESSAGE( "realizable " << realizable << ", unrealizable " << unrealizable );
}
