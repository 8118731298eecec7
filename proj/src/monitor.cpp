#include <tslagent/monitor.hpp>

#include <algorithm>
#include <cctype>

namespace tslagent::monitor {

std::string to_string( Verdict v )
{
  switch ( v )
  {
  case Verdict::Pending:
    return "pending";
  case Verdict::Satisfied:
    return "satisfied";
  case Verdict::Violated:
    return "violated";
  }
  return "?";
}

std::string to_string( ConjunctKind k )
{
  switch ( k )
  {
  case ConjunctKind::Guarantee:
    return "guarantee";
  case ConjunctKind::Exclusivity:
    return "exclusivity";
  case ConjunctKind::PointInTime:
    return "point-in-time";
  }
  return "?";
}

std::string to_string( ViolationClass c )
{
  switch ( c )
  {
  case ViolationClass::Procedural:
    return "procedural";
  case ViolationClass::Hallucination:
    return "hallucination";
  case ViolationClass::Arithmetic:
    return "arithmetic";
  }
  return "?";
}

Ltl3Monitor::Ltl3Monitor( ltl::Ltl const& formula )
    : positive_( automata::ltl_to_nba( ltl::to_nnf( formula ) ) ),
      negative_( automata::ltl_to_nba( ltl::to_nnf( !formula ) ) )
{
  reset();
}

void Ltl3Monitor::reset()
{
  pos_states_ = positive_.initial;
  neg_states_ = negative_.initial;
  verdict_ = pos_states_.empty() ? Verdict::Violated : neg_states_.empty() ? Verdict::Satisfied : Verdict::Pending;
}

std::vector<int> Ltl3Monitor::advance( automata::Nba const& nba, std::vector<int> const& current, Letter letter,
                                       Letter care )
{
  std::vector<int> next;
  for ( int s : current )
    for ( auto const& e : nba.out[static_cast<std::size_t>( s )] )
      if ( e.label.matches( letter, care ) )
        next.push_back( e.target );
  std::sort( next.begin(), next.end() );
  next.erase( std::unique( next.begin(), next.end() ), next.end() );
  return next;
}

Verdict Ltl3Monitor::step( Letter letter )
{
  return step_partial( letter, ~Letter{ 0 } );
}

Verdict Ltl3Monitor::step_partial( Letter letter, Letter care )
{
  if ( verdict_ != Verdict::Pending )
    return verdict_;
  // every remaining automaton state is productive, so an empty set means no
  // infinite extension exists
  pos_states_ = advance( positive_, pos_states_, letter, care );
  neg_states_ = advance( negative_, neg_states_, letter, care );
  if ( care == ~Letter{ 0 } )
  {
    if ( pos_states_.empty() )
      verdict_ = Verdict::Violated;
    else if ( neg_states_.empty() )
      verdict_ = Verdict::Satisfied;
  }
  else if ( pos_states_.empty() )
    verdict_ = Verdict::Violated;
  return verdict_;
}

namespace {

bool has_until( ltl::Ltl const& f )
{
  switch ( f.op() )
  {
  case ltl::Op::Until:
    return true;
  case ltl::Op::Not:
  case ltl::Op::Next:
    return has_until( f.lhs() );
  case ltl::Op::And:
  case ltl::Op::Or:
  case ltl::Op::Release:
    return has_until( f.lhs() ) || has_until( f.rhs() );
  default:
    return false;
  }
}

bool mentions_identifier( std::string const& text, std::string const& name )
{
  auto ident = []( char c ) { return std::isalnum( static_cast<unsigned char>( c ) ) || c == '_'; };
  for ( auto pos = text.find( name ); pos != std::string::npos; pos = text.find( name, pos + 1 ) )
  {
    bool left = pos == 0 || !ident( text[pos - 1] );
    bool right = pos + name.size() >= text.size() || !ident( text[pos + name.size()] );
    if ( left && right )
      return true;
  }
  return false;
}

ViolationClass classify( ltl::Ltl const& f, ltl::LtlSpec const& spec )
{
  auto mask = f.props();
  for ( int p = 0; p < spec.dict.size(); ++p )
    if ( ( mask >> p ) & 1u )
      for ( auto const& cell : spec.signals.written_cells )
        if ( mentions_identifier( spec.dict.props[static_cast<std::size_t>( p )].term, cell ) )
          return ViolationClass::Arithmetic;
  if ( ( mask & spec.dict.input_mask() ) == 0u )
    return ViolationClass::Procedural;
  return ViolationClass::Hallucination;
}

} // namespace

std::vector<MonitoredConjunct> monitored_conjuncts( ltl::LtlSpec const& spec )
{
  std::vector<MonitoredConjunct> out;
  for ( auto const& g : spec.guarantees )
    out.push_back( { g.text, ConjunctKind::Guarantee, classify( g.formula, spec ), g.formula } );
  for ( auto const& e : spec.exclusivity )
    out.push_back( { e.text, ConjunctKind::Exclusivity, classify( e.formula, spec ), e.formula } );
  for ( auto const& a : spec.assumptions )
  {
    auto mask = a.formula.props();
    bool relates = ( mask & spec.dict.input_mask() ) != 0u && ( mask & spec.dict.output_mask() ) != 0u;
    if ( relates && !has_until( ltl::to_nnf( a.formula ) ) )
      out.push_back( { a.text, ConjunctKind::PointInTime, classify( a.formula, spec ), a.formula } );
  }
  return out;
}

SpecMonitor::SpecMonitor( ltl::LtlSpec const& spec ) : dict_( spec.dict ), conjuncts_( monitored_conjuncts( spec ) )
{
  for ( auto const& c : conjuncts_ )
    monitors_.emplace_back( c.formula );
  status_.resize( conjuncts_.size() );
  for ( std::size_t k = 0; k < monitors_.size(); ++k )
    record( k, monitors_[k].verdict() );
}

void SpecMonitor::record( std::size_t k, Verdict v )
{
  auto& s = status_[k];
  if ( v == Verdict::Violated && s.verdict != Verdict::Violated )
    s.first_violation = turns_;
  s.verdict = v;
}

void SpecMonitor::observe( Letter letter )
{
  for ( std::size_t k = 0; k < monitors_.size(); ++k )
    record( k, monitors_[k].step( letter ) );
  ++turns_;
}

void SpecMonitor::observe_turn( runtime::TurnResult const& turn )
{
  observe( turn.inputs | turn.outputs );
}

void SpecMonitor::observe_inputs( Letter inputs )
{
  for ( std::size_t k = 0; k < monitors_.size(); ++k )
    record( k, monitors_[k].step_partial( inputs, dict_.input_mask() ) );
  ++turns_;
}

bool SpecMonitor::violated() const
{
  return first_violation() >= 0;
}

long SpecMonitor::first_violation() const
{
  long first = -1;
  for ( auto const& s : status_ )
    if ( s.verdict == Verdict::Violated && ( first < 0 || s.first_violation < first ) )
      first = s.first_violation;
  return first;
}

bool SpecMonitor::violated( ViolationClass category ) const
{
  for ( std::size_t k = 0; k < status_.size(); ++k )
    if ( status_[k].verdict == Verdict::Violated && conjuncts_[k].category == category )
      return true;
  return false;
}

json SpecMonitor::to_json() const
{
  json out = json::array();
  for ( std::size_t k = 0; k < conjuncts_.size(); ++k )
  {
    json c = { { "conjunct", conjuncts_[k].text },
               { "kind", to_string( conjuncts_[k].kind ) },
               { "class", to_string( conjuncts_[k].category ) },
               { "verdict", to_string( status_[k].verdict ) } };
    if ( status_[k].first_violation >= 0 )
      c["first_violation"] = status_[k].first_violation;
    out.push_back( c );
  }
  return out;
}

} // namespace tslagent::monitor
