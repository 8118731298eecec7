#include <tslagent/synthesis.hpp>

#include <algorithm>
#include <unordered_map>

namespace tslagent::synth {

namespace {

struct Product
{
  std::vector<std::pair<int, int>> nodes; // (machine state, automaton state)
  std::vector<std::vector<std::pair<int, Letter>>> succ; // (node, input valuation)
  std::vector<int> initial;
};

Product explore( MealyMachine const& m, automata::Nba const& nba, std::size_t cap )
{
  Product p;
  std::unordered_map<std::uint64_t, int> index;
  auto node = [&]( int s, int q ) {
    auto key = ( static_cast<std::uint64_t>( s ) << 32 ) | static_cast<std::uint32_t>( q );
    auto [it, fresh] = index.emplace( key, static_cast<int>( p.nodes.size() ) );
    if ( fresh )
    {
      if ( p.nodes.size() >= cap )
        throw ProductTooLarge( "product exceeds " + std::to_string( cap ) + " states" );
      p.nodes.emplace_back( s, q );
      p.succ.emplace_back();
    }
    return it->second;
  };
  for ( int q : nba.initial )
    p.initial.push_back( node( 0, q ) );
  for ( std::size_t n = 0; n < p.nodes.size(); ++n )
  {
    auto [s, q] = p.nodes[n];
    std::vector<std::pair<int, Letter>> out;
    for ( std::size_t v = 0; v < m.num_valuations(); ++v )
    {
      auto const& t = m.step( s, static_cast<Letter>( v ) );
      auto letter = static_cast<Letter>( v ) | t.outputs;
      for ( auto const& e : nba.out[static_cast<std::size_t>( q )] )
        if ( e.label.matches( letter ) )
          out.emplace_back( node( t.next, e.target ), static_cast<Letter>( v ) );
    }
    p.succ[n] = std::move( out );
  }
  return p;
}

/// Iterative Tarjan; returns the SCC id per node.
std::vector<int> components( Product const& p, int& count )
{
  auto const n = p.nodes.size();
  std::vector<int> index( n, -1 ), low( n, 0 ), comp( n, -1 );
  std::vector<char> on_stack( n, 0 );
  std::vector<int> stack;
  std::vector<std::pair<int, std::size_t>> call;
  int counter = 0;
  count = 0;
  for ( std::size_t root = 0; root < n; ++root )
  {
    if ( index[root] >= 0 )
      continue;
    call.emplace_back( static_cast<int>( root ), 0 );
    while ( !call.empty() )
    {
      auto& [v, k] = call.back();
      auto const vi = static_cast<std::size_t>( v );
      if ( k == 0 && index[vi] < 0 )
      {
        index[vi] = low[vi] = counter++;
        stack.push_back( v );
        on_stack[vi] = 1;
      }
      if ( k < p.succ[vi].size() )
      {
        auto w = p.succ[vi][k].first;
        ++k;
        auto const wi = static_cast<std::size_t>( w );
        if ( index[wi] < 0 )
          call.emplace_back( w, 0 );
        else if ( on_stack[wi] )
          low[vi] = std::min( low[vi], index[wi] );
        continue;
      }
      if ( low[vi] == index[vi] )
      {
        while ( true )
        {
          auto w = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>( w )] = 0;
          comp[static_cast<std::size_t>( w )] = count;
          if ( w == v )
            break;
        }
        ++count;
      }
      auto finished = v;
      call.pop_back();
      if ( !call.empty() )
      {
        auto parent = static_cast<std::size_t>( call.back().first );
        low[parent] = std::min( low[parent], low[static_cast<std::size_t>( finished )] );
      }
    }
  }
  return comp;
}

/// Shortest path from any node in `from` to `to` restricted to `allowed`
/// nodes; returns the input valuations along the path.
std::optional<std::vector<Letter>> path( Product const& p, std::vector<int> const& from, int to,
                                         std::vector<char> const& allowed, bool nonempty )
{
  auto const n = p.nodes.size();
  std::vector<int> parent( n, -2 );
  std::vector<Letter> via( n, 0 );
  std::vector<int> queue;
  for ( int s : from )
  {
    if ( !nonempty && s == to )
      return std::vector<Letter>{};
    if ( parent[static_cast<std::size_t>( s )] == -2 )
    {
      parent[static_cast<std::size_t>( s )] = -1;
      queue.push_back( s );
    }
  }
  for ( std::size_t h = 0; h < queue.size(); ++h )
  {
    auto v = queue[h];
    for ( auto [w, letter] : p.succ[static_cast<std::size_t>( v )] )
    {
      auto const wi = static_cast<std::size_t>( w );
      if ( !allowed[wi] )
        continue;
      if ( w == to )
      {
        std::vector<Letter> inputs{ letter };
        for ( int x = v; parent[static_cast<std::size_t>( x )] >= 0; x = parent[static_cast<std::size_t>( x )] )
          inputs.push_back( via[static_cast<std::size_t>( x )] );
        std::reverse( inputs.begin(), inputs.end() );
        return inputs;
      }
      if ( parent[wi] == -2 )
      {
        parent[wi] = v;
        via[wi] = letter;
        queue.push_back( w );
      }
    }
  }
  return std::nullopt;
}

} // namespace

VerificationReport verify_machine( MealyMachine const& m, ltl::Ltl const& formula, std::size_t max_product_states )
{
  m.validate();
  auto nba = automata::ltl_to_nba( ltl::to_nnf( !formula ) );
  VerificationReport report;
  report.automaton_states = static_cast<std::size_t>( nba.num_states() );
  auto product = explore( m, nba, max_product_states );
  report.product_states = product.nodes.size();
  int count = 0;
  auto comp = components( product, count );
  // nodes of nontrivial components
  std::vector<int> size( static_cast<std::size_t>( count ), 0 );
  std::vector<char> self_loop( static_cast<std::size_t>( count ), 0 );
  for ( std::size_t v = 0; v < product.nodes.size(); ++v )
  {
    ++size[static_cast<std::size_t>( comp[v] )];
    for ( auto [w, letter] : product.succ[v] )
      if ( static_cast<std::size_t>( w ) == v )
        self_loop[static_cast<std::size_t>( comp[v] )] = 1;
  }
  for ( std::size_t v = 0; v < product.nodes.size(); ++v )
  {
    auto c = static_cast<std::size_t>( comp[v] );
    if ( !nba.accepting[static_cast<std::size_t>( product.nodes[v].second )] || ( size[c] < 2 && !self_loop[c] ) )
      continue;
    std::vector<char> everywhere( product.nodes.size(), 1 );
    std::vector<char> inside( product.nodes.size(), 0 );
    for ( std::size_t w = 0; w < product.nodes.size(); ++w )
      inside[w] = comp[w] == comp[v];
    auto stem = path( product, product.initial, static_cast<int>( v ), everywhere, false );
    auto loop = path( product, { static_cast<int>( v ) }, static_cast<int>( v ), inside, true );
    Counterexample cex;
    cex.stem = *stem;
    cex.loop = *loop;
    auto outputs = m.run( [&] {
      auto all = cex.stem;
      all.insert( all.end(), cex.loop.begin(), cex.loop.end() );
      return all;
    }() );
    for ( std::size_t i = 0; i < cex.stem.size(); ++i )
      cex.word.stem.push_back( cex.stem[i] | outputs[i] );
    for ( std::size_t i = 0; i < cex.loop.size(); ++i )
      cex.word.loop.push_back( cex.loop[i] | outputs[cex.stem.size() + i] );
    report.counterexample = std::move( cex );
    report.passed = false;
    return report;
  }
  report.passed = true;
  return report;
}

VerificationReport verify_machine( MealyMachine const& m, ltl::LtlSpec const& spec, std::size_t max_product_states )
{
  return verify_machine( m, spec.formula, max_product_states );
}

} // namespace tslagent::synth
