#pragma once

#include <tslagent/ltl.hpp>
#include <tslagent/spec.hpp>

#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testing_support {

inline std::string source_path( std::string const& relative )
{
  return std::string( TSLAGENT_SOURCE_DIR ) + "/" + relative;
}

inline std::string read_text( std::string const& relative )
{
  std::ifstream in( source_path( relative ) );
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline tslagent::spec::SpecAst load_spec( std::string const& name )
{
  return tslagent::spec::parse_spec( read_text( "specs/" + name ) );
}

using Rng = std::mt19937_64;

inline int uniform( Rng& rng, int lo, int hi )
{
  return std::uniform_int_distribution<int>( lo, hi )( rng );
}

/// Random formula with at most `budget` nodes over props 0..props-1.
inline tslagent::ltl::Ltl random_ltl( Rng& rng, int budget, int props )
{
  using tslagent::ltl::Ltl;
  if ( budget <= 1 )
  {
    int pick = uniform( rng, 0, props + 1 );
    if ( pick == props )
      return Ltl::constant( true );
    if ( pick == props + 1 )
      return Ltl::constant( false );
    return Ltl::atom( pick );
  }
  if ( budget == 2 || uniform( rng, 0, 2 ) == 0 )
  {
    auto child = random_ltl( rng, budget - 1, props );
    switch ( uniform( rng, 0, 3 ) )
    {
    case 0:
      return !child;
    case 1:
      return Ltl::next( child );
    case 2:
      return Ltl::globally( child );
    default:
      return Ltl::finally( child );
    }
  }
  int left = uniform( rng, 1, budget - 2 );
  auto a = random_ltl( rng, left, props );
  auto b = random_ltl( rng, budget - 1 - left, props );
  switch ( uniform( rng, 0, 4 ) )
  {
  case 0:
    return a && b;
  case 1:
    return a || b;
  case 2:
    return Ltl::until( a, b );
  case 3:
    return Ltl::release( a, b );
  default:
    return Ltl::weak_until( a, b );
  }
}

inline tslagent::ltl::Lasso random_lasso( Rng& rng, int props, int max_stem, int max_loop )
{
  tslagent::ltl::Lasso word;
  auto letter = [&] { return static_cast<tslagent::ltl::Letter>( uniform( rng, 0, ( 1 << props ) - 1 ) ); };
  int stem = uniform( rng, 0, max_stem );
  int loop = uniform( rng, 1, max_loop );
  for ( int i = 0; i < stem; ++i )
    word.stem.push_back( letter() );
  for ( int i = 0; i < loop; ++i )
    word.loop.push_back( letter() );
  return word;
}

} // namespace testing_support
