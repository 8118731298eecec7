#include <tslagent/synthesis.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <unordered_map>

namespace tslagent::synth {

using automata::Nba;
using ltl::Ltl;

std::vector<Letter> MealyMachine::run( std::vector<Letter> const& inputs ) const
{
  std::vector<Letter> out;
  int state = 0;
  for ( auto i : inputs )
  {
    auto const& t = step( state, i );
    out.push_back( t.outputs );
    state = t.next;
  }
  return out;
}

void MealyMachine::validate() const
{
  if ( states.empty() )
    throw std::invalid_argument( "machine has no states" );
  for ( std::size_t s = 0; s < states.size(); ++s )
  {
    if ( states[s].size() != num_valuations() )
      throw std::invalid_argument( "state " + std::to_string( s ) + " is not total over input valuations" );
    for ( auto const& t : states[s] )
    {
      if ( t.next < 0 || t.next >= num_states() )
        throw std::invalid_argument( "state " + std::to_string( s ) + " has a successor out of range" );
      if ( t.outputs & dict.input_mask() )
        throw std::invalid_argument( "state " + std::to_string( s ) + " emits an input prop" );
      Letter covered = 0;
      for ( auto const& g : dict.groups )
      {
        int chosen = 0;
        for ( int a : g.alternatives )
        {
          covered |= Letter{ 1 } << a;
          if ( ( t.outputs >> a ) & 1u )
            ++chosen;
        }
        if ( chosen != 1 )
          throw std::invalid_argument( "state " + std::to_string( s ) + " does not choose exactly one update of " +
                                       g.signal );
      }
      if ( t.outputs & ~covered )
        throw std::invalid_argument( "state " + std::to_string( s ) + " emits an ungrouped output" );
    }
  }
}

MealyMachine minimize( MealyMachine const& m )
{
  auto const n = static_cast<std::size_t>( m.num_states() );
  auto const nv = m.num_valuations();
  std::vector<int> cls( n, 0 );
  {
    std::map<std::vector<Letter>, int> sig;
    for ( std::size_t s = 0; s < n; ++s )
    {
      std::vector<Letter> outs;
      for ( auto const& t : m.states[s] )
        outs.push_back( t.outputs );
      cls[s] = sig.emplace( outs, static_cast<int>( sig.size() ) ).first->second;
    }
  }
  std::size_t classes = 0;
  while ( true )
  {
    std::map<std::pair<int, std::vector<int>>, int> sig;
    std::vector<int> next( n );
    for ( std::size_t s = 0; s < n; ++s )
    {
      std::vector<int> succ;
      for ( auto const& t : m.states[s] )
        succ.push_back( cls[static_cast<std::size_t>( t.next )] );
      next[s] = sig.emplace( std::make_pair( cls[s], succ ), static_cast<int>( sig.size() ) ).first->second;
    }
    cls = std::move( next );
    if ( sig.size() == classes )
      break;
    classes = sig.size();
  }
  // breadth-first renumbering over reachable classes
  std::vector<int> renumber( n, -1 );
  std::vector<std::size_t> rep;
  auto visit = [&]( std::size_t s ) {
    auto& r = renumber[static_cast<std::size_t>( cls[s] )];
    if ( r < 0 )
    {
      r = static_cast<int>( rep.size() );
      rep.push_back( s );
    }
    return r;
  };
  visit( 0 );
  MealyMachine result;
  result.dict = m.dict;
  result.signals = m.signals;
  for ( std::size_t i = 0; i < rep.size(); ++i )
  {
    std::vector<Transition> row( nv );
    for ( std::size_t v = 0; v < nv; ++v )
    {
      auto const& t = m.states[rep[i]][v];
      row[v] = Transition{ t.outputs, visit( static_cast<std::size_t>( t.next ) ) };
    }
    result.states.push_back( std::move( row ) );
  }
  return result;
}

Nba build_ucw( ltl::LtlSpec const& spec, bool with_exclusivity )
{
  Ltl assume = Ltl::constant( true );
  for ( auto const& a : spec.assumptions )
    assume = assume && a.formula;
  Nba ucw;
  auto add = [&]( Ltl const& bad ) {
    auto nba = automata::ltl_to_nba( ltl::to_nnf( bad ) );
    if ( !nba.empty() )
      ucw = automata::disjoint_union( ucw, nba );
  };
  for ( auto const& g : spec.guarantees )
    add( assume && !g.formula );
  if ( with_exclusivity )
    for ( auto const& e : spec.exclusivity )
      add( !e.formula );
  return ucw;
}

namespace {

/// Output valuations with exactly one alternative per group, in
/// lexicographic order of alternative names (first group most significant).
std::vector<Letter> output_choices( ltl::PropDictionary const& dict )
{
  std::vector<Letter> result{ 0 };
  for ( auto const& g : dict.groups )
  {
    std::vector<Letter> extended;
    for ( auto base : result )
      for ( int a : g.alternatives )
        extended.push_back( base | ( Letter{ 1 } << a ) );
    result = std::move( extended );
  }
  return result;
}

class BudgetExceeded : public std::runtime_error
{
public:
  BudgetExceeded() : std::runtime_error( "search budget exceeded" ) {}
};

/// Counting-function positions: one byte per automaton state, 0 when no run
/// is there, otherwise 1 + the largest number of rejecting visits so far.
using Position = std::string;

class SafetyGame
{
public:
  SafetyGame( Nba const& ucw, int bound, int num_inputs, std::vector<Letter> const& choices,
              std::size_t max_positions )
      : ucw_( ucw ), bound_( bound ), nin_( std::size_t{ 1 } << num_inputs ), choices_( choices ),
        max_positions_( max_positions ),
        targets_( static_cast<std::size_t>( ucw.num_states() ) * nin_ * choices.size() )
  {
  }

  int initial()
  {
    Position p( static_cast<std::size_t>( ucw_.num_states() ), '\0' );
    for ( int q : ucw_.initial )
      p[static_cast<std::size_t>( q )] = static_cast<char>( 1 + ( ucw_.accepting[static_cast<std::size_t>( q )] ? 1 : 0 ) );
    return intern( p );
  }

  /// Successor position id for input valuation `i` and choice `c`, or -1
  /// when some count exceeds the bound. Requires a solved winning `id`.
  int successor( int id, std::size_t i, std::size_t c ) const
  {
    return rows_[static_cast<std::size_t>( id )][i * choices_.size() + c];
  }

  int join( int a, int b )
  {
    if ( a < 0 || a == b )
      return b;
    if ( b < 0 )
      return a;
    auto key = a < b ? std::make_pair( a, b ) : std::make_pair( b, a );
    auto it = joins_.find( key );
    if ( it != joins_.end() )
      return it->second;
    Position out = positions_[static_cast<std::size_t>( a )];
    auto const& other = positions_[static_cast<std::size_t>( b )];
    for ( std::size_t q = 0; q < out.size(); ++q )
      out[q] = std::max( out[q], other[q] );
    auto id = intern( out );
    joins_.emplace( key, id );
    return id;
  }

  bool winning( int id )
  {
    if ( id < 0 )
      return false;
    if ( status_[static_cast<std::size_t>( id )] == Unknown )
      solve( id );
    return status_[static_cast<std::size_t>( id )] == Win;
  }

  /// Index of the first choice keeping `id` winning under input `i`.
  int first_winning_choice( int id, std::size_t i )
  {
    for ( std::size_t c = 0; c < choices_.size(); ++c )
      if ( winning( successor( id, i, c ) ) )
        return static_cast<int>( c );
    return -1;
  }

  std::size_t size() const { return positions_.size(); }

private:
  enum Status : char { Unknown, Win, Lose };

  /// Automaton successors of state q under letter (i, c), cached.
  std::vector<int> const& targets( std::size_t q, std::size_t letter )
  {
    auto& slot = targets_[q * nin_ * choices_.size() + letter];
    if ( !slot )
    {
      auto const full = static_cast<Letter>( letter / choices_.size() ) | choices_[letter % choices_.size()];
      std::vector<int> ts;
      for ( auto const& e : ucw_.out[q] )
        if ( e.label.matches( full ) )
          ts.push_back( e.target );
      std::sort( ts.begin(), ts.end() );
      ts.erase( std::unique( ts.begin(), ts.end() ), ts.end() );
      slot = std::make_unique<std::vector<int>>( std::move( ts ) );
    }
    return *slot;
  }

  std::optional<Position> step( Position const& p, std::vector<std::size_t> const& active, std::size_t letter )
  {
    Position out( p.size(), '\0' );
    for ( auto q : active )
    {
      for ( int target : targets( q, letter ) )
      {
        auto t = static_cast<std::size_t>( target );
        int v = p[q] + ( ucw_.accepting[t] ? 1 : 0 );
        if ( v - 1 > bound_ )
          return std::nullopt;
        if ( v > out[t] )
          out[t] = static_cast<char>( v );
      }
    }
    return out;
  }

  int intern( Position const& p )
  {
    auto it = index_.find( p );
    if ( it != index_.end() )
      return it->second;
    if ( positions_.size() >= max_positions_ )
      throw BudgetExceeded();
    auto id = static_cast<int>( positions_.size() );
    positions_.push_back( p );
    status_.push_back( Unknown );
    rows_.emplace_back();
    index_.emplace( p, id );
    return id;
  }

  void solve( int root )
  {
    auto const nc = choices_.size();
    // explore the unsolved region reachable from root
    std::vector<int> region{ root };
    std::unordered_map<int, std::size_t> local{ { root, 0 } };
    for ( std::size_t r = 0; r < region.size(); ++r )
    {
      std::vector<int> row( nin_ * nc, -1 );
      auto const pos = positions_[static_cast<std::size_t>( region[r] )];
      std::vector<std::size_t> active;
      for ( std::size_t q = 0; q < pos.size(); ++q )
        if ( pos[q] != 0 )
          active.push_back( q );
      for ( std::size_t i = 0; i < nin_; ++i )
        for ( std::size_t c = 0; c < nc; ++c )
        {
          auto s = step( pos, active, i * nc + c );
          if ( !s )
            continue;
          auto id = intern( *s );
          row[i * nc + c] = id;
          if ( status_[static_cast<std::size_t>( id )] == Unknown && !local.count( id ) )
          {
            local.emplace( id, region.size() );
            region.push_back( id );
          }
        }
      rows_[static_cast<std::size_t>( region[r] )] = std::move( row );
    }
    // attractor of the environment: an input all of whose choices lose
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pred( region.size() );
    std::vector<std::vector<int>> alive( region.size(), std::vector<int>( nin_, 0 ) );
    std::vector<char> lost( region.size(), 0 );
    std::vector<std::size_t> work;
    for ( std::size_t r = 0; r < region.size(); ++r )
    {
      auto const& row = rows_[static_cast<std::size_t>( region[r] )];
      for ( std::size_t i = 0; i < nin_; ++i )
        for ( std::size_t c = 0; c < nc; ++c )
        {
          auto id = row[i * nc + c];
          if ( id < 0 || status_[static_cast<std::size_t>( id )] == Lose )
            continue;
          ++alive[r][i];
          auto it = local.find( id );
          if ( it != local.end() )
            pred[it->second].emplace_back( r, i );
        }
      for ( std::size_t i = 0; i < nin_ && !lost[r]; ++i )
        if ( alive[r][i] == 0 )
        {
          lost[r] = 1;
          work.push_back( r );
        }
    }
    while ( !work.empty() )
    {
      auto r = work.back();
      work.pop_back();
      for ( auto [p, i] : pred[r] )
      {
        if ( lost[p] )
          continue;
        if ( --alive[p][i] == 0 )
        {
          lost[p] = 1;
          work.push_back( p );
        }
      }
    }
    for ( std::size_t r = 0; r < region.size(); ++r )
    {
      auto id = static_cast<std::size_t>( region[r] );
      status_[id] = lost[r] ? Lose : Win;
      if ( lost[r] )
        std::vector<int>().swap( rows_[id] );
    }
  }

  struct PairHash
  {
    std::size_t operator()( std::pair<int, int> const& p ) const
    {
      return std::hash<std::uint64_t>{}( ( static_cast<std::uint64_t>( p.first ) << 32 ) ^
                                         static_cast<std::uint32_t>( p.second ) );
    }
  };

  Nba const& ucw_;
  int bound_;
  std::size_t nin_;
  std::vector<Letter> const& choices_;
  std::size_t max_positions_;
  std::vector<Position> positions_;
  std::vector<Status> status_;
  std::vector<std::vector<int>> rows_;
  std::unordered_map<Position, int> index_;
  std::unordered_map<std::pair<int, int>, int, PairHash> joins_;
  std::vector<std::unique_ptr<std::vector<int>>> targets_;
};

/// Machine read off the winning region: one state per visited position,
/// always taking the first winning choice.
MealyMachine strategy_machine( SafetyGame& game, ltl::LtlSpec const& spec, std::vector<Letter> const& choices,
                               std::size_t max_states )
{
  auto const nin = std::size_t{ 1 } << spec.dict.num_inputs;
  std::vector<int> states{ game.initial() };
  std::unordered_map<int, int> index{ { states[0], 0 } };
  MealyMachine m;
  m.dict = spec.dict;
  m.signals = spec.signals;
  for ( std::size_t s = 0; s < states.size(); ++s )
  {
    if ( states.size() > max_states )
      throw BudgetExceeded();
    std::vector<Transition> row( nin );
    for ( std::size_t i = 0; i < nin; ++i )
    {
      auto c = static_cast<std::size_t>( game.first_winning_choice( states[s], i ) );
      auto next = game.successor( states[s], i, c );
      auto [it, fresh] = index.emplace( next, static_cast<int>( states.size() ) );
      if ( fresh )
        states.push_back( next );
      row[i] = Transition{ choices[c], it->second };
    }
    m.states.push_back( std::move( row ) );
  }
  return m;
}

/// Backtracking search for a k-state machine whose least annotation stays
/// inside the winning region. Slots (state, input) are filled in order;
/// fresh states are opened in order, which breaks renaming symmetry.
class MachineSearch
{
public:
  MachineSearch( SafetyGame& game, std::vector<Letter> const& choices, int num_inputs, int k,
                 std::size_t budget )
      : game_( game ), choices_( choices ), nin_( std::size_t{ 1 } << num_inputs ), k_( k ), budget_( budget )
  {
  }

  /// Found machine transitions, empty when no k-state machine exists.
  std::optional<std::vector<std::vector<Transition>>> run()
  {
    auto init = game_.initial();
    if ( !game_.winning( init ) )
      return std::nullopt;
    ann_.assign( static_cast<std::size_t>( k_ ), -1 );
    ann_[0] = init;
    choice_.assign( static_cast<std::size_t>( k_ ), std::vector<int>( nin_, -1 ) );
    target_.assign( static_cast<std::size_t>( k_ ), std::vector<int>( nin_, -1 ) );
    used_ = 1;
    if ( !dfs( 0, 0 ) )
      return std::nullopt;
    std::vector<std::vector<Transition>> rows( static_cast<std::size_t>( used_ ) );
    for ( std::size_t t = 0; t < rows.size(); ++t )
      for ( std::size_t i = 0; i < nin_; ++i )
        rows[t].push_back( Transition{ choices_[static_cast<std::size_t>( choice_[t][i] )], target_[t][i] } );
    return rows;
  }

private:
  bool dfs( std::size_t t, std::size_t i )
  {
    if ( i == nin_ )
    {
      ++t;
      i = 0;
    }
    if ( t == static_cast<std::size_t>( used_ ) )
      return true;
    for ( std::size_t c = 0; c < choices_.size(); ++c )
    {
      auto succ = game_.successor( ann_[t], i, c );
      if ( !game_.winning( succ ) )
        continue;
      int const limit = std::min( used_ + 1, k_ );
      for ( int target = 0; target < limit; ++target )
      {
        if ( ++nodes_ > budget_ )
          throw BudgetExceeded();
        auto saved_ann = ann_;
        auto saved_used = used_;
        if ( target == used_ )
          ++used_;
        choice_[t][i] = static_cast<int>( c );
        target_[t][i] = target;
        if ( absorb( target, succ ) && dfs( t, i + 1 ) )
          return true;
        choice_[t][i] = -1;
        target_[t][i] = -1;
        ann_ = std::move( saved_ann );
        used_ = saved_used;
      }
    }
    return false;
  }

  /// Joins `pos` into the annotation of `state` and propagates along the
  /// transitions assigned so far. False when some annotation loses.
  bool absorb( int state, int pos )
  {
    std::vector<std::pair<int, int>> work{ { state, pos } };
    while ( !work.empty() )
    {
      auto [s, p] = work.back();
      work.pop_back();
      auto& a = ann_[static_cast<std::size_t>( s )];
      auto joined = game_.join( a, p );
      if ( joined == a )
        continue;
      if ( !game_.winning( joined ) )
        return false;
      a = joined;
      for ( std::size_t i = 0; i < nin_; ++i )
      {
        auto c = choice_[static_cast<std::size_t>( s )][i];
        if ( c < 0 )
          continue;
        auto succ = game_.successor( a, i, static_cast<std::size_t>( c ) );
        if ( succ < 0 )
          return false;
        work.emplace_back( target_[static_cast<std::size_t>( s )][i], succ );
      }
    }
    return true;
  }

  SafetyGame& game_;
  std::vector<Letter> const& choices_;
  std::size_t nin_;
  int k_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  std::vector<int> ann_;
  std::vector<std::vector<int>> choice_;
  std::vector<std::vector<int>> target_;
  int used_ = 0;
};

} // namespace

SynthesisResult synthesize( ltl::LtlSpec const& spec, SynthesisOptions const& options )
{
  SynthesisResult result;
  result.max_states_tried = options.max_states;
  if ( options.max_states < 1 )
    throw std::invalid_argument( "max_states must be positive" );
  auto const choices = output_choices( spec.dict );

  // Unrealizable outright when no word satisfies the specification.
  if ( automata::ltl_to_nba( ltl::to_nnf( spec.formula ) ).empty() )
  {
    result.definitive = true;
    result.detail = "specification is unsatisfiable";
    return result;
  }

  auto const ucw = build_ucw( spec, false );
  result.ucw_states = ucw.num_states();

  for ( int bound = 0; bound <= options.max_bound; ++bound )
  {
    SafetyGame game( ucw, bound, spec.dict.num_inputs, choices, options.max_positions );
    try
    {
      if ( !game.winning( game.initial() ) )
        continue;
    }
    catch ( BudgetExceeded const& )
    {
      result.detail = "safety game exceeded " + std::to_string( options.max_positions ) + " positions at bound " +
                      std::to_string( bound );
      return result;
    }
    result.bound = bound;

    std::optional<MealyMachine> upper;
    try
    {
      upper = minimize( strategy_machine( game, spec, choices, options.max_positions ) );
    }
    catch ( BudgetExceeded const& )
    {
    }
    int const ceiling = upper ? std::min( upper->num_states() - 1, options.max_states ) : options.max_states;
    bool refuted_all = true;
    for ( int k = 1; k <= ceiling; ++k )
    {
      MachineSearch search( game, choices, spec.dict.num_inputs, k, options.search_budget );
      try
      {
        auto rows = search.run();
        if ( !rows )
          continue;
        MealyMachine m;
        m.dict = spec.dict;
        m.signals = spec.signals;
        m.states = std::move( *rows );
        result.machine = std::move( m );
        result.minimal = refuted_all;
        break;
      }
      catch ( BudgetExceeded const& )
      {
        refuted_all = false;
      }
    }
    if ( !result.machine && upper && upper->num_states() <= options.max_states )
    {
      result.machine = std::move( upper );
      result.minimal = refuted_all;
    }
    if ( !result.machine )
    {
      result.detail = "no strategy with at most " + std::to_string( options.max_states ) + " states found";
      return result;
    }
    result.status = SynthesisResult::Status::Realizable;
    result.states = result.machine->num_states();
    result.detail = "realizable with " + std::to_string( result.states ) + " states";
    return result;
  }
  result.detail = "no strategy within counting bound " + std::to_string( options.max_bound );
  return result;
}

} // namespace tslagent::synth
