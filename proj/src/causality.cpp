#include <tslagent/causality.hpp>

#include <algorithm>
#include <map>

namespace tslagent::causality {

namespace {

/// Nodes (nba state, lasso position) from which an accepting run exists;
/// returns the flag per nba state at position 0.
std::vector<char> accepting_starts( automata::Nba const& nba, ltl::Lasso const& word )
{
  auto n = static_cast<std::size_t>( nba.num_states() );
  auto len = word.length();
  auto stem = word.stem.size();
  auto node = [&]( std::size_t s, std::size_t pos ) { return s * len + pos; };
  auto next_pos = [&]( std::size_t pos ) { return pos + 1 < len ? pos + 1 : stem; };

  std::vector<std::vector<std::size_t>> succ( n * len );
  for ( std::size_t s = 0; s < n; ++s )
    for ( std::size_t pos = 0; pos < len; ++pos )
      for ( auto const& e : nba.out[s] )
        if ( e.label.matches( word.at( pos ) ) )
          succ[node( s, pos )].push_back( node( static_cast<std::size_t>( e.target ), next_pos( pos ) ) );

  // nu Z. mu Y. (acc && EX Z) || EX Y
  std::vector<char> z( n * len, 1 );
  for ( bool changed = true; changed; )
  {
    std::vector<char> y( n * len, 0 );
    for ( bool grew = true; grew; )
    {
      grew = false;
      for ( std::size_t v = 0; v < n * len; ++v )
      {
        if ( y[v] )
          continue;
        bool acc = nba.accepting[v / len];
        for ( auto w : succ[v] )
          if ( y[w] || ( acc && z[w] ) )
          {
            y[v] = 1;
            grew = true;
            break;
          }
      }
    }
    changed = y != z;
    z = std::move( y );
  }
  std::vector<char> out( n );
  for ( std::size_t s = 0; s < n; ++s )
    out[s] = z[node( s, 0 )];
  return out;
}

/// Joint word of the machine started in `state` on inputs loop^ω.
ltl::Lasso loop_word( synth::MealyMachine const& m, int state, std::vector<Letter> const& loop )
{
  std::vector<int> boundary{ state };
  std::vector<Letter> letters;
  for ( ;; )
  {
    int q = boundary.back();
    for ( auto in : loop )
    {
      auto const& t = m.step( q, in );
      letters.push_back( in | t.outputs );
      q = t.next;
    }
    auto seen = std::find( boundary.begin(), boundary.end(), q );
    if ( seen != boundary.end() )
    {
      auto split = static_cast<std::size_t>( seen - boundary.begin() ) * loop.size();
      return { { letters.begin(), letters.begin() + static_cast<std::ptrdiff_t>( split ) },
               { letters.begin() + static_cast<std::ptrdiff_t>( split ), letters.end() } };
    }
    boundary.push_back( q );
  }
}

/// Shortest-loop deviation within the bounds whose joint word satisfies `psi`.
std::optional<InputTrace> find_deviation( synth::MealyMachine const& m, Ltl const& psi, CauseOptions const& options )
{
  auto nba = automata::ltl_to_nba( ltl::to_nnf( psi ) );
  if ( nba.empty() )
    return std::nullopt;
  auto letters = Letter{ 1 } << m.dict.num_inputs;

  // product states reachable by stems of length <= max_stem, earliest first
  struct Reach
  {
    int parent = -1;
    Letter letter = 0;
  };
  std::map<std::pair<int, int>, int> index;
  std::vector<std::pair<int, int>> nodes;
  std::vector<Reach> reach;
  std::vector<int> frontier;
  for ( int n0 : nba.initial )
    if ( index.emplace( std::pair{ 0, n0 }, static_cast<int>( nodes.size() ) ).second )
    {
      frontier.push_back( static_cast<int>( nodes.size() ) );
      nodes.push_back( { 0, n0 } );
      reach.push_back( {} );
    }
  for ( int depth = 0; depth < options.max_stem; ++depth )
  {
    std::vector<int> next;
    for ( int id : frontier )
    {
      auto [q, n] = nodes[static_cast<std::size_t>( id )];
      for ( Letter in = 0; in < letters; ++in )
      {
        auto const& t = m.step( q, in );
        auto joint = in | t.outputs;
        for ( auto const& e : nba.out[static_cast<std::size_t>( n )] )
          if ( e.label.matches( joint ) && index.emplace( std::pair{ t.next, e.target }, static_cast<int>( nodes.size() ) ).second )
          {
            next.push_back( static_cast<int>( nodes.size() ) );
            nodes.push_back( { t.next, e.target } );
            reach.push_back( { id, in } );
          }
      }
    }
    frontier = std::move( next );
  }

  std::vector<Letter> loop;
  for ( int length = 1; length <= options.max_loop; ++length )
  {
    loop.assign( static_cast<std::size_t>( length ), 0 );
    for ( ;; )
    {
      std::map<int, std::vector<char>> starts;
      for ( std::size_t id = 0; id < nodes.size(); ++id )
      {
        auto [q, n] = nodes[id];
        auto it = starts.find( q );
        if ( it == starts.end() )
          it = starts.emplace( q, accepting_starts( nba, loop_word( m, q, loop ) ) ).first;
        if ( !it->second[static_cast<std::size_t>( n )] )
          continue;
        InputTrace witness;
        witness.loop = loop;
        for ( int at = static_cast<int>( id ); reach[static_cast<std::size_t>( at )].parent >= 0;
              at = reach[static_cast<std::size_t>( at )].parent )
          witness.stem.push_back( reach[static_cast<std::size_t>( at )].letter );
        std::reverse( witness.stem.begin(), witness.stem.end() );
        return witness;
      }
      // next loop word in lexicographic order
      int k = length - 1;
      while ( k >= 0 && loop[static_cast<std::size_t>( k )] + 1 == letters )
        loop[static_cast<std::size_t>( k-- )] = 0;
      if ( k < 0 )
        break;
      ++loop[static_cast<std::size_t>( k )];
    }
  }
  return std::nullopt;
}

void validate( synth::MealyMachine const& m, InputTrace const& trace, Ltl const& effect, CauseOptions const& options )
{
  if ( trace.loop.empty() )
    throw CauseError( CauseError::Kind::BadTrace, "trace loop must not be empty" );
  for ( auto const* part : { &trace.stem, &trace.loop } )
    for ( auto l : *part )
      if ( l & ~m.dict.input_mask() )
        throw CauseError( CauseError::Kind::BadTrace, "trace letters must only set input props" );
  if ( static_cast<int>( trace.stem.size() ) > options.max_stem ||
       static_cast<int>( trace.loop.size() ) > options.max_loop )
    throw CauseError( CauseError::Kind::BoundTooSmall,
                      "deviation bounds (stem " + std::to_string( options.max_stem ) + ", loop " +
                          std::to_string( options.max_loop ) + ") are below the trace length (stem " +
                          std::to_string( trace.stem.size() ) + ", loop " + std::to_string( trace.loop.size() ) + ")" );
  if ( effect.props() & m.dict.input_mask() )
    throw CauseError( CauseError::Kind::WrongProps, "effects may only mention output props" );
  if ( !ltl::evaluate( effect, joint_word( m, trace ) ) )
    throw CauseError( CauseError::Kind::EffectNotOnTrace, "effect does not hold on the trace" );
}

std::string literal( ltl::PropDictionary const& dict, int prop, bool positive )
{
  return ( positive ? "" : "!" ) + dict.props[static_cast<std::size_t>( prop )].term;
}

} // namespace

ltl::Lasso joint_word( synth::MealyMachine const& m, InputTrace const& trace )
{
  ltl::Lasso out;
  int q = 0;
  for ( auto in : trace.stem )
  {
    auto const& t = m.step( q, in );
    out.stem.push_back( in | t.outputs );
    q = t.next;
  }
  auto tail = loop_word( m, q, trace.loop );
  out.stem.insert( out.stem.end(), tail.stem.begin(), tail.stem.end() );
  out.loop = tail.loop;
  return out;
}

CauseVerdict check_cause( synth::MealyMachine const& m, InputTrace const& trace, Ltl const& effect, Ltl const& cause,
                          CauseOptions const& options )
{
  validate( m, trace, effect, options );
  if ( cause.props() & m.dict.output_mask() )
    throw CauseError( CauseError::Kind::WrongProps, "causes may only mention input props" );
  CauseVerdict v;
  v.holds_on_trace = ltl::evaluate( cause, ltl::Lasso{ trace.stem, trace.loop } );
  v.witness = find_deviation( m, !cause && effect, options );
  v.counterfactual_valid = !v.witness;
  return v;
}

std::vector<Candidate> cause_templates( ltl::PropDictionary const& dict )
{
  std::vector<std::pair<Ltl, std::string>> literals;
  std::vector<int> atoms;
  for ( int p = 0; p < dict.num_inputs; ++p )
    for ( bool positive : { true, false } )
    {
      literals.push_back( { positive ? Ltl::atom( p ) : !Ltl::atom( p ), literal( dict, p, positive ) } );
      atoms.push_back( p );
    }
  std::vector<Candidate> out;
  for ( auto const& [l, text] : literals )
    out.push_back( { Ltl::globally( l ), "G " + text } );
  for ( auto const& [l, text] : literals )
    out.push_back( { Ltl::finally( l ), "F " + text } );
  for ( char op : { 'U', 'W' } )
    for ( std::size_t a = 0; a < literals.size(); ++a )
      for ( std::size_t b = 0; b < literals.size(); ++b )
      {
        if ( atoms[a] == atoms[b] )
          continue;
        auto const& [la, ta] = literals[a];
        auto const& [lb, tb] = literals[b];
        out.push_back( { op == 'U' ? Ltl::until( la, lb ) : Ltl::weak_until( la, lb ),
                         "(" + ta + " " + op + " " + tb + ")" } );
      }
  for ( int k = 1; k <= 3; ++k )
    for ( auto const& [l, text] : literals )
    {
      Ltl f = l;
      std::string t = text;
      for ( int j = 0; j < k; ++j )
      {
        f = Ltl::next( f );
        t = "X " + t;
      }
      out.push_back( { f, t } );
    }
  return out;
}

CauseResult synthesize_cause( synth::MealyMachine const& m, InputTrace const& trace, Ltl const& effect,
                              CauseOptions const& options )
{
  validate( m, trace, effect, options );
  CauseResult result;
  ltl::Lasso inputs{ trace.stem, trace.loop };
  for ( auto const& c : cause_templates( m.dict ) )
    if ( ltl::evaluate( c.formula, inputs ) && !find_deviation( m, !c.formula && effect, options ) )
      result.certified.push_back( c );

  if ( result.certified.empty() )
  {
    if ( !find_deviation( m, !effect, options ) )
    {
      result.cause = Candidate{ Ltl::constant( true ), "true" };
      result.note = "input-independent effect: it holds on every deviation";
    }
    else
      result.note = "no template certifies the effect";
    return result;
  }

  // weakest: no other certified candidate is strictly implied by it
  for ( auto const& c : result.certified )
  {
    bool maximal = true;
    for ( auto const& d : result.certified )
      if ( &c != &d && automata::implies( c.formula, d.formula ) && !automata::implies( d.formula, c.formula ) )
      {
        maximal = false;
        break;
      }
    if ( maximal )
    {
      result.cause = c;
      break;
    }
  }
  return result;
}

std::string formula_text( Ltl const& f, ltl::PropDictionary const& dict )
{
  return f.to_string( [&]( int p ) { return dict.props[static_cast<std::size_t>( p )].term; } );
}

} // namespace tslagent::causality
