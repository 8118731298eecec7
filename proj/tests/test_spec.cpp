#include "support.hpp"

#include <doctest.h>

using namespace tslagent::spec;
using testing_support::load_spec;
using testing_support::Rng;
using testing_support::uniform;

namespace {

std::size_t count_all( Formula const& f, std::initializer_list<Op> ops )
{
  std::size_t n = 0;
  for ( auto op : ops )
    n += count_nodes( f, op );
  return n;
}

FunctionTermPtr random_term( Rng& rng, int depth )
{
  static char const* const signals[] = { "s", "summary", "count" };
  static char const* const functions[] = { "toCave", "mix", "add" };
  if ( depth == 0 || uniform( rng, 0, 2 ) == 0 )
  {
    if ( uniform( rng, 0, 4 ) == 0 )
      return FunctionTerm::apply( std::to_string( uniform( rng, 0, 9 ) ), {} );
    return FunctionTerm::signal( signals[uniform( rng, 0, 2 )] );
  }
  int which = uniform( rng, 0, 2 );
  std::vector<FunctionTermPtr> args;
  for ( int i = 0; i < which; ++i )
    args.push_back( random_term( rng, depth - 1 ) );
  return FunctionTerm::apply( functions[which], std::move( args ) );
}

FormulaPtr random_formula( Rng& rng, int depth )
{
  static Op const unary[] = { Op::Not, Op::Next, Op::Globally, Op::Finally };
  static Op const binary[] = { Op::And, Op::Or, Op::Implies, Op::Iff, Op::Until, Op::WeakUntil, Op::Release };
  if ( depth == 0 || uniform( rng, 0, 3 ) == 0 )
  {
    switch ( uniform( rng, 0, 4 ) )
    {
    case 0:
      return Formula::constant( uniform( rng, 0, 1 ) == 1 );
    case 1:
    case 2:
    {
      static char const* const preds[] = { "inCave", "near", "safe" };
      int which = uniform( rng, 0, 2 );
      std::vector<FunctionTermPtr> args;
      for ( int i = 0; i < 2 - which; ++i )
        args.push_back( random_term( rng, 2 ) );
      return Formula::predicate( preds[which], std::move( args ) );
    }
    default:
      return Formula::update( uniform( rng, 0, 1 ) ? "out" : "count", random_term( rng, 2 ) );
    }
  }
  if ( uniform( rng, 0, 2 ) == 0 )
    return Formula::unary( unary[uniform( rng, 0, 3 )], random_formula( rng, depth - 1 ) );
  return Formula::binary( binary[uniform( rng, 0, 6 )], random_formula( rng, depth - 1 ),
                          random_formula( rng, depth - 1 ) );
}

} // namespace

TEST_CASE( "adventure spec section sizes" )
{
  auto ast = load_spec( "adventure.tsl" );
  REQUIRE( ast.sections.size() == 4u );
  CHECK( ast.count( SectionKind::InitiallyAssume ) == 3u );
  CHECK( ast.count( SectionKind::AlwaysAssume ) == 3u );
  CHECK( ast.count( SectionKind::Guarantee ) == 2u );
  CHECK( ast.count( SectionKind::AlwaysGuarantee ) == 3u );
}

TEST_CASE( "minimal spec" )
{
  auto ast = parse_spec( "always guarantee { p(x); }" );
  REQUIRE( ast.sections.size() == 1u );
  CHECK( ast.sections[0].kind == SectionKind::AlwaysGuarantee );
  REQUIRE( ast.sections[0].formulas.size() == 1u );
  auto const& f = *ast.sections[0].formulas[0];
  CHECK( f.op == Op::Predicate );
  CHECK( f.name == "p" );
  CHECK( f.args.size() == 1u );
}

TEST_CASE( "unclosed update term" )
{
  try
  {
    parse_spec( "guarantee { [a <- f(b) }" );
    FAIL( "expected a syntax error" );
  }
  catch ( SpecError const& e )
  {
    CHECK( e.kind() == SpecError::Kind::Syntax );
    CHECK( std::string( e.what() ).find( "unclosed '['" ) != std::string::npos );
    CHECK( e.span().line == 1 );
    CHECK( e.span().column == 24 );
    CHECK( e.token() == "}" );
  }
}

TEST_CASE( "lexical and block errors carry positions" )
{
  try
  {
    parse_spec( "guarantee {\n  p(x) $ q;\n}" );
    FAIL( "expected a lexical error" );
  }
  catch ( SpecError const& e )
  {
    CHECK( e.kind() == SpecError::Kind::Lexical );
    CHECK( e.span().line == 2 );
    CHECK( e.span().column == 8 );
    auto diag = e.diagnostic( "guarantee {\n  p(x) $ q;\n}", "t.tsl" );
    CHECK( diag.find( "t.tsl:2:8:" ) == 0u );
    CHECK( diag.find( "  p(x) $ q;" ) != std::string::npos );
  }
  CHECK_THROWS_AS( parse_spec( "guarantee { p(x);" ), SpecError );
  try
  {
    parse_spec( "guarantee { p(x);" );
  }
  catch ( SpecError const& e )
  {
    CHECK( e.kind() == SpecError::Kind::UnbalancedBlock );
  }
  CHECK_THROWS_AS( parse_spec( "sometimes guarantee { p(x); }" ), SpecError );
}

TEST_CASE( "the verbatim choices listing has an unbalanced parenthesis" )
{
  CHECK_THROWS_AS( load_spec( "choices_original.tsl" ), SpecError );
  CHECK_NOTHROW( load_spec( "choices.tsl" ) );
}

TEST_CASE( "comments and optional trailing separator" )
{
  auto ast = parse_spec( "// heading\ninitially guarantee {\n  [o <- f(s)] // tail\n}\n" );
  REQUIRE( ast.sections.size() == 1u );
  CHECK( ast.sections[0].kind == SectionKind::InitiallyGuarantee );
  CHECK( ast.sections[0].formulas.size() == 1u );
}

TEST_CASE( "precedence and associativity" )
{
  auto f = parse_formula( "a && b || c -> d -> e <-> g(x)" );
  REQUIRE( f->op == Op::Iff );
  REQUIRE( f->lhs->op == Op::Implies );
  CHECK( f->lhs->rhs->op == Op::Implies );
  CHECK( f->lhs->lhs->op == Op::Or );
  CHECK( f->lhs->lhs->lhs->op == Op::And );

  auto u = parse_formula( "a U b U c" );
  REQUIRE( u->op == Op::Until );
  CHECK( u->rhs->op == Op::Until );

  auto w = parse_formula( "!a W b && c" );
  REQUIRE( w->op == Op::And );
  CHECK( w->lhs->op == Op::WeakUntil );
  CHECK( w->lhs->lhs->op == Op::Not );

  auto g = parse_formula( "G F X p(x)" );
  CHECK( g->op == Op::Globally );
  CHECK( g->lhs->op == Op::Finally );
  CHECK( g->lhs->lhs->op == Op::Next );

  auto chain = parse_formula( "a <-> b <-> c" );
  REQUIRE( chain->op == Op::Iff );
  CHECK( chain->lhs->op == Op::Iff );
}

TEST_CASE( "plus is the add function" )
{
  auto f = parse_formula( "[safeCount <- safeCount + 1]" );
  REQUIRE( f->op == Op::Update );
  CHECK( f->value->name == "add" );
  REQUIRE( f->value->args.size() == 2u );
  CHECK( f->value->args[0]->kind == FunctionTerm::Kind::Signal );
  CHECK( f->value->args[1]->is_literal() );
}

TEST_CASE( "desugaring weak until" )
{
  auto core = desugar( parse_formula( "(! inCave(s)) W (inMarket(s))" ) );
  auto expected = parse_formula( "((!inCave(s)) U inMarket(s)) || (false R (!inCave(s)))" );
  CHECK( same_structure( *core, *expected ) );
  CHECK( to_string( *desugar( parse_formula( "F p(x)" ) ) ) == "(true U p(x))" );
  CHECK( to_string( *desugar( parse_formula( "G p(x)" ) ) ) == "(false R p(x))" );
  CHECK( to_string( *desugar( parse_formula( "a -> b" ) ) ) == "(!a || b)" );
}

TEST_CASE( "adventure guarantees have five conjuncts" )
{
  auto core = compile_spec( load_spec( "adventure.tsl" ) );
  CHECK( conjuncts( core.guarantees ).size() == 5u );
  CHECK( conjuncts( core.assumptions ).size() == 6u );
  CHECK( is_core( *core.guarantees ) );
  CHECK( is_core( *core.assumptions ) );
}

TEST_CASE( "signal tables" )
{
  auto adventure = compile_spec( load_spec( "adventure.tsl" ) ).signals;
  CHECK( adventure.inputs.empty() );
  CHECK( adventure.cells == std::set<std::string>{ "s" } );
  CHECK( adventure.outputs == std::set<std::string>{ "storyPassage" } );
  CHECK( adventure.written_cells.empty() );
  CHECK( adventure.predicates == std::map<std::string, std::size_t>{ { "inCave", 1 }, { "inMarket", 1 }, { "inTown", 1 } } );
  CHECK( adventure.functions == std::map<std::string, std::size_t>{ { "toCave", 1 }, { "toMarket", 1 }, { "toTown", 1 } } );

  auto choices = compile_spec( load_spec( "choices.tsl" ) ).signals;
  CHECK( choices.cells.count( "safeCount" ) == 1u );
  CHECK( choices.written_cells == std::set<std::string>{ "safeCount" } );
  CHECK( choices.inputs == std::set<std::string>{ "safe", "safeThreshold" } );
  CHECK( choices.functions.at( "add" ) == 2u );
  CHECK( choices.functions.count( "1" ) == 0u );

  auto fig2 = compile_spec( load_spec( "fig2.tsl" ) ).signals;
  CHECK( fig2.cells == std::set<std::string>{ "summary" } );
  CHECK( fig2.predicates.size() == 2u );
}

TEST_CASE( "semantic errors" )
{
  try
  {
    compile_spec( "guarantee { p(x); G p(x, y); }" );
    FAIL( "expected arity mismatch" );
  }
  catch ( SpecError const& e )
  {
    CHECK( e.kind() == SpecError::Kind::Semantic );
    CHECK( e.token() == "p" );
    CHECK( std::string( e.what() ).find( "arity mismatch for symbol 'p'" ) != std::string::npos );
  }
  CHECK_THROWS_WITH_AS( compile_spec( "guarantee { [o <- f(x)]; [y <- o(x)]; }" ),
                        doctest::Contains( "update target 'o' used as function symbol" ), SpecError );
  CHECK_THROWS_WITH_AS( compile_spec( "always assume { p(x); }" ), doctest::Contains( "no guarantees" ),
                        SpecError );
}

TEST_CASE( "round trip on the corpus" )
{
  for ( auto name : { "adventure.tsl", "forest.tsl", "choices.tsl", "fig2.tsl", "fig2_initial.tsl" } )
  {
    CAPTURE( name );
    auto ast = load_spec( name );
    auto again = parse_spec( to_string( ast ) );
    CHECK( same_structure( ast, again ) );
    CHECK( to_string( again ) == to_string( ast ) );
  }
}

TEST_CASE( "round trip on random specs" )
{
  Rng rng( 20240611 );
  static SectionKind const kinds[] = { SectionKind::InitiallyAssume, SectionKind::AlwaysAssume,
                                       SectionKind::InitiallyGuarantee, SectionKind::Guarantee,
                                       SectionKind::AlwaysGuarantee };
  for ( int n = 0; n < 100; ++n )
  {
    SpecAst ast;
    int sections = uniform( rng, 1, 4 );
    for ( int i = 0; i < sections; ++i )
    {
      Section s;
      s.kind = kinds[uniform( rng, 0, 4 )];
      int count = uniform( rng, 1, 3 );
      for ( int k = 0; k < count; ++k )
        s.formulas.push_back( random_formula( rng, 4 ) );
      ast.sections.push_back( std::move( s ) );
    }
    auto text = to_string( ast );
    CAPTURE( text );
    auto again = parse_spec( text );
    CHECK( same_structure( ast, again ) );

    auto core = desugar( again );
    CHECK( count_all( *core.assumptions, { Op::WeakUntil, Op::Finally, Op::Globally, Op::Implies, Op::Iff } ) == 0u );
    CHECK( count_all( *core.guarantees, { Op::WeakUntil, Op::Finally, Op::Globally, Op::Implies, Op::Iff } ) == 0u );
  }
}

TEST_CASE( "every symbol is housed in the signal table" )
{
  for ( auto name : { "adventure.tsl", "choices.tsl", "fig2.tsl" } )
  {
    auto core = compile_spec( load_spec( name ) );
    auto const& t = core.signals;
    auto check_term = [&]( auto&& self, FunctionTerm const& term ) -> void {
      if ( term.kind == FunctionTerm::Kind::Signal )
        CHECK( ( t.cells.count( term.name ) + t.inputs.count( term.name ) ) > 0u );
      else if ( !term.is_literal() )
        CHECK( t.functions.count( term.name ) == 1u );
      for ( auto const& a : term.args )
        self( self, *a );
    };
    for ( auto const& f : { core.assumptions, core.guarantees } )
      for_each_atom( *f, [&]( Formula const& atom ) {
        if ( atom.op == Op::Predicate )
        {
          CHECK( t.predicates.count( atom.name ) == 1u );
          for ( auto const& a : atom.args )
            check_term( check_term, *a );
        }
        else
        {
          CHECK( ( t.outputs.count( atom.name ) + t.written_cells.count( atom.name ) ) == 1u );
          check_term( check_term, *atom.value );
        }
      } );
  }
}
