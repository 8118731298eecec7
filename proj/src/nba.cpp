#include <tslagent/automata.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

namespace tslagent::automata {

using ltl::Ltl;
using ltl::Op;

std::size_t Nba::num_edges() const
{
  std::size_t n = 0;
  for ( auto const& e : out )
    n += e.size();
  return n;
}

bool Nba::accepts( ltl::Lasso const& word ) const
{
  if ( word.loop.empty() )
    throw std::invalid_argument( "lasso loop must be non-empty" );
  auto const len = word.length();
  auto const loop_start = word.stem.size();
  auto const n = static_cast<std::size_t>( num_states() );
  // product node (q, i): automaton in q about to read position i
  auto node = [&]( std::size_t q, std::size_t i ) { return q * len + i; };
  auto next_pos = [&]( std::size_t i ) { return i + 1 == len ? loop_start : i + 1; };
  std::vector<char> seen( n * len, 0 );
  std::vector<std::size_t> stack;
  for ( int q : initial )
  {
    auto id = node( static_cast<std::size_t>( q ), 0 );
    if ( !seen[id] )
    {
      seen[id] = 1;
      stack.push_back( id );
    }
  }
  std::vector<std::size_t> reach;
  while ( !stack.empty() )
  {
    auto id = stack.back();
    stack.pop_back();
    reach.push_back( id );
    auto q = id / len;
    auto i = id % len;
    for ( auto const& e : out[q] )
    {
      if ( !e.label.matches( word.at( i ) ) )
        continue;
      auto t = node( static_cast<std::size_t>( e.target ), next_pos( i ) );
      if ( !seen[t] )
      {
        seen[t] = 1;
        stack.push_back( t );
      }
    }
  }
  // an accepting reachable node that lies on a cycle
  for ( auto start : reach )
  {
    if ( !accepting[start / len] || start % len < loop_start )
      continue;
    std::vector<char> visited( n * len, 0 );
    std::vector<std::size_t> todo{ start };
    while ( !todo.empty() )
    {
      auto id = todo.back();
      todo.pop_back();
      auto q = id / len;
      auto i = id % len;
      for ( auto const& e : out[q] )
      {
        if ( !e.label.matches( word.at( i ) ) )
          continue;
        auto t = node( static_cast<std::size_t>( e.target ), next_pos( i ) );
        if ( t == start )
          return true;
        if ( !visited[t] )
        {
          visited[t] = 1;
          todo.push_back( t );
        }
      }
    }
  }
  return false;
}

namespace {

using FormulaSet = std::vector<int>; // sorted formula ids

struct Cover
{
  Cube cube;
  FormulaSet next;
  std::vector<int> postponed; // sorted until indices left unfulfilled

  bool operator==( Cover const& ) const = default;
  bool operator<( Cover const& o ) const
  {
    return std::tie( cube, next, postponed ) < std::tie( o.cube, o.next, o.postponed );
  }
};

bool subset( std::vector<int> const& a, std::vector<int> const& b )
{
  return std::includes( b.begin(), b.end(), a.begin(), a.end() );
}

class Tableau
{
public:
  explicit Tableau( NbaOptions const& options ) : options_( options ) {}

  int intern( Ltl const& f )
  {
    auto it = ids_.find( f );
    if ( it != ids_.end() )
      return it->second;
    Entry e;
    e.formula = f;
    if ( f.op() != Op::True && f.op() != Op::False && f.op() != Op::Atom )
    {
      e.lhs = intern( f.lhs() );
      if ( f.op() != Op::Not && f.op() != Op::Next )
        e.rhs = intern( f.rhs() );
    }
    if ( f.op() == Op::Until )
      e.until_index = num_untils_++;
    auto id = static_cast<int>( entries_.size() );
    entries_.push_back( e );
    ids_.emplace( f, id );
    return id;
  }

  Nba build( Ltl const& root )
  {
    if ( root.size() > options_.max_formula_nodes )
      throw FormulaTooLarge( "formula has " + std::to_string( root.size() ) + " nodes, limit is " +
                             std::to_string( options_.max_formula_nodes ) );
    auto root_id = intern( root );
    std::map<std::pair<FormulaSet, int>, int> index;
    std::vector<std::pair<FormulaSet, int>> states;
    std::map<FormulaSet, std::vector<Cover>> cover_cache;
    Nba nba;
    auto const n = num_untils_;
    auto state_of = [&]( FormulaSet const& set, int j ) {
      auto key = std::make_pair( set, j );
      auto it = index.find( key );
      if ( it != index.end() )
        return it->second;
      auto id = static_cast<int>( states.size() );
      if ( static_cast<std::size_t>( id ) >= options_.max_states )
        throw FormulaTooLarge( "automaton exceeds " + std::to_string( options_.max_states ) + " states" );
      index.emplace( key, id );
      states.push_back( key );
      nba.out.emplace_back();
      nba.accepting.push_back( j == n ? 1 : 0 );
      return id;
    };
    if ( root.is_constant( false ) )
      return nba;
    nba.initial.push_back( state_of( root.is_constant( true ) ? FormulaSet{} : FormulaSet{ root_id }, 0 ) );
    for ( std::size_t s = 0; s < states.size(); ++s )
    {
      auto const set = states[s].first;
      auto const j = states[s].second;
      auto cached = cover_cache.find( set );
      if ( cached == cover_cache.end() )
        cached = cover_cache.emplace( set, covers( set ) ).first;
      std::vector<Edge> edges;
      for ( auto const& c : cached->second )
      {
        int level = j == n ? 0 : j;
        while ( level < n && !std::binary_search( c.postponed.begin(), c.postponed.end(), level ) )
          ++level;
        edges.push_back( Edge{ c.cube, state_of( c.next, level ) } );
      }
      nba.out[s] = std::move( edges );
    }
    return nba;
  }

private:
  struct Entry
  {
    Ltl formula;
    int lhs = -1;
    int rhs = -1;
    int until_index = -1;
  };

  std::vector<Cover> covers( FormulaSet const& set )
  {
    std::vector<Cover> result;
    Partial p;
    p.todo = set;
    expand( p, result );
    std::sort( result.begin(), result.end() );
    result.erase( std::unique( result.begin(), result.end() ), result.end() );
    // drop covers that demand more than another cover and promise less
    std::vector<Cover> kept;
    for ( std::size_t i = 0; i < result.size(); ++i )
    {
      bool dominated = false;
      for ( std::size_t k = 0; k < result.size() && !dominated; ++k )
      {
        if ( k == i )
          continue;
        auto const& a = result[k];
        auto const& b = result[i];
        dominated = a.cube.weaker_than( b.cube ) && subset( a.next, b.next ) && subset( a.postponed, b.postponed );
      }
      if ( !dominated )
        kept.push_back( result[i] );
    }
    return kept;
  }

  struct Partial
  {
    std::vector<int> todo;
    std::set<int> done;
    Cube cube;
    std::set<int> next;
    std::set<int> postponed;
  };

  void expand( Partial p, std::vector<Cover>& out )
  {
    while ( !p.todo.empty() )
    {
      auto id = p.todo.back();
      p.todo.pop_back();
      if ( !p.done.insert( id ).second )
        continue;
      auto const& e = entries_[static_cast<std::size_t>( id )];
      auto const& f = e.formula;
      switch ( f.op() )
      {
      case Op::True:
        break;
      case Op::False:
        return;
      case Op::Atom:
      {
        auto bit = Letter{ 1 } << f.prop();
        if ( p.cube.neg & bit )
          return;
        p.cube.pos |= bit;
        break;
      }
      case Op::Not:
      {
        auto bit = Letter{ 1 } << f.lhs().prop();
        if ( p.cube.pos & bit )
          return;
        p.cube.neg |= bit;
        break;
      }
      case Op::And:
        p.todo.push_back( e.lhs );
        p.todo.push_back( e.rhs );
        break;
      case Op::Or:
      {
        auto alt = p;
        alt.todo.push_back( e.rhs );
        expand( std::move( alt ), out );
        p.todo.push_back( e.lhs );
        break;
      }
      case Op::Next:
        p.next.insert( e.lhs );
        break;
      case Op::Until:
      {
        auto alt = p;
        alt.todo.push_back( e.rhs );
        expand( std::move( alt ), out );
        p.todo.push_back( e.lhs );
        p.next.insert( id );
        p.postponed.insert( e.until_index );
        break;
      }
      case Op::Release:
      {
        auto alt = p;
        alt.todo.push_back( e.lhs );
        alt.todo.push_back( e.rhs );
        expand( std::move( alt ), out );
        p.todo.push_back( e.rhs );
        p.next.insert( id );
        break;
      }
      }
    }
    Cover c;
    c.cube = p.cube;
    // `true` inside a successor set carries no obligation
    for ( int id : p.next )
      if ( entries_[static_cast<std::size_t>( id )].formula.op() != Op::True )
        c.next.push_back( id );
    c.postponed.assign( p.postponed.begin(), p.postponed.end() );
    out.push_back( std::move( c ) );
  }

  NbaOptions options_;
  std::vector<Entry> entries_;
  std::unordered_map<Ltl, int, ltl::LtlHash> ids_;
  int num_untils_ = 0;
};

void drop_subsumed_edges( std::vector<Edge>& edges )
{
  std::sort( edges.begin(), edges.end() );
  edges.erase( std::unique( edges.begin(), edges.end() ), edges.end() );
  std::vector<Edge> kept;
  for ( std::size_t i = 0; i < edges.size(); ++i )
  {
    bool dominated = false;
    for ( std::size_t k = 0; k < edges.size() && !dominated; ++k )
      dominated = k != i && edges[k].target == edges[i].target && edges[k].label.weaker_than( edges[i].label );
    if ( !dominated )
      kept.push_back( edges[i] );
  }
  edges = std::move( kept );
}

} // namespace

Nba prune( Nba const& nba )
{
  auto const n = static_cast<std::size_t>( nba.num_states() );
  // states on an accepting cycle or from which one is reachable
  std::vector<std::vector<int>> pred( n );
  for ( std::size_t q = 0; q < n; ++q )
    for ( auto const& e : nba.out[q] )
      pred[static_cast<std::size_t>( e.target )].push_back( static_cast<int>( q ) );
  std::vector<char> good( n, 0 );
  for ( std::size_t a = 0; a < n; ++a )
  {
    if ( !nba.accepting[a] || good[a] )
      continue;
    // does a reach itself?
    std::vector<char> seen( n, 0 );
    std::vector<int> stack;
    for ( auto const& e : nba.out[a] )
      if ( !seen[static_cast<std::size_t>( e.target )] )
      {
        seen[static_cast<std::size_t>( e.target )] = 1;
        stack.push_back( e.target );
      }
    while ( !stack.empty() )
    {
      auto q = static_cast<std::size_t>( stack.back() );
      stack.pop_back();
      for ( auto const& e : nba.out[q] )
        if ( !seen[static_cast<std::size_t>( e.target )] )
        {
          seen[static_cast<std::size_t>( e.target )] = 1;
          stack.push_back( e.target );
        }
    }
    if ( !seen[a] )
      continue;
    // mark everything backward reachable from a
    std::vector<int> back{ static_cast<int>( a ) };
    good[a] = 1;
    while ( !back.empty() )
    {
      auto q = static_cast<std::size_t>( back.back() );
      back.pop_back();
      for ( int p : pred[q] )
        if ( !good[static_cast<std::size_t>( p )] )
        {
          good[static_cast<std::size_t>( p )] = 1;
          back.push_back( p );
        }
    }
  }
  // keep good states reachable from good initial states
  std::vector<int> renumber( n, -1 );
  Nba result;
  std::vector<int> order;
  auto visit = [&]( int q ) {
    auto& r = renumber[static_cast<std::size_t>( q )];
    if ( r < 0 )
    {
      r = static_cast<int>( order.size() );
      order.push_back( q );
    }
    return r;
  };
  for ( int q : nba.initial )
    if ( good[static_cast<std::size_t>( q )] )
      result.initial.push_back( visit( q ) );
  for ( std::size_t i = 0; i < order.size(); ++i )
  {
    auto q = static_cast<std::size_t>( order[i] );
    std::vector<Edge> edges;
    for ( auto const& e : nba.out[q] )
      if ( good[static_cast<std::size_t>( e.target )] )
        edges.push_back( Edge{ e.label, visit( e.target ) } );
    drop_subsumed_edges( edges );
    result.out.push_back( std::move( edges ) );
    result.accepting.push_back( nba.accepting[q] );
  }
  std::sort( result.initial.begin(), result.initial.end() );
  result.initial.erase( std::unique( result.initial.begin(), result.initial.end() ), result.initial.end() );
  return result;
}

Nba merge_bisimilar( Nba const& nba )
{
  auto const n = static_cast<std::size_t>( nba.num_states() );
  std::vector<int> cls( n );
  for ( std::size_t q = 0; q < n; ++q )
    cls[q] = nba.accepting[q] ? 1 : 0;
  std::size_t classes = 0;
  while ( true )
  {
    std::map<std::pair<int, std::vector<Edge>>, int> sig;
    std::vector<int> next( n );
    for ( std::size_t q = 0; q < n; ++q )
    {
      std::vector<Edge> edges;
      for ( auto const& e : nba.out[q] )
        edges.push_back( Edge{ e.label, cls[static_cast<std::size_t>( e.target )] } );
      drop_subsumed_edges( edges );
      auto key = std::make_pair( cls[q], std::move( edges ) );
      auto it = sig.emplace( std::move( key ), static_cast<int>( sig.size() ) ).first;
      next[q] = it->second;
    }
    cls = std::move( next );
    if ( sig.size() == classes )
      break;
    classes = sig.size();
  }
  // renumber classes in order of first discovery from the initial states
  std::vector<int> renumber( classes, -1 );
  std::vector<std::size_t> representative;
  Nba result;
  auto visit = [&]( std::size_t q ) {
    auto& r = renumber[static_cast<std::size_t>( cls[q] )];
    if ( r < 0 )
    {
      r = static_cast<int>( representative.size() );
      representative.push_back( q );
    }
    return r;
  };
  for ( int q : nba.initial )
    result.initial.push_back( visit( static_cast<std::size_t>( q ) ) );
  for ( std::size_t i = 0; i < representative.size(); ++i )
  {
    auto q = representative[i];
    std::vector<Edge> edges;
    for ( auto const& e : nba.out[q] )
      edges.push_back( Edge{ e.label, visit( static_cast<std::size_t>( e.target ) ) } );
    drop_subsumed_edges( edges );
    result.out.push_back( std::move( edges ) );
    result.accepting.push_back( nba.accepting[q] );
  }
  std::sort( result.initial.begin(), result.initial.end() );
  result.initial.erase( std::unique( result.initial.begin(), result.initial.end() ), result.initial.end() );
  return result;
}

Nba ltl_to_nba( Ltl const& nnf_formula, NbaOptions const& options )
{
  if ( !ltl::is_nnf( nnf_formula ) )
    throw std::invalid_argument( "ltl_to_nba expects a formula in negation normal form" );
  Tableau tableau( options );
  auto nba = tableau.build( nnf_formula );
  if ( options.simplify )
    nba = merge_bisimilar( prune( nba ) );
  return nba;
}

Nba disjoint_union( Nba const& a, Nba const& b )
{
  Nba result = a;
  auto const offset = a.num_states();
  for ( std::size_t q = 0; q < b.out.size(); ++q )
  {
    std::vector<Edge> edges;
    for ( auto const& e : b.out[q] )
      edges.push_back( Edge{ e.label, e.target + offset } );
    result.out.push_back( std::move( edges ) );
    result.accepting.push_back( b.accepting[q] );
  }
  for ( int q : b.initial )
    result.initial.push_back( q + offset );
  return result;
}

bool satisfiable( Ltl const& formula )
{
  return !ltl_to_nba( ltl::to_nnf( formula ) ).empty();
}

bool implies( Ltl const& a, Ltl const& b )
{
  return !satisfiable( a && !b );
}

} // namespace tslagent::automata
