#include <tslagent/ltl.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace tslagent::ltl {

struct Ltl::Node
{
  Op op = Op::True;
  int prop = -1;
  std::shared_ptr<Node const> lhs;
  std::shared_ptr<Node const> rhs;
  std::size_t hash = 0;
  std::size_t size = 1;
  std::uint64_t props = 0;
};

namespace {

std::size_t mix( std::size_t h, std::size_t v )
{
  return h ^ ( v + 0x9e3779b97f4a7c15ULL + ( h << 6 ) + ( h >> 2 ) );
}

} // namespace

Ltl::Ltl() : Ltl( constant( true ) ) {}

Ltl::Ltl( std::shared_ptr<Node const> node ) : node_( std::move( node ) ) {}

Ltl Ltl::make( Op op, int prop, Ltl const* lhs, Ltl const* rhs )
{
  auto n = std::make_shared<Node>();
  n->op = op;
  n->prop = prop;
  n->hash = mix( static_cast<std::size_t>( op ) * 31u + 7u, static_cast<std::size_t>( prop + 1 ) );
  if ( op == Op::Atom )
    n->props = std::uint64_t{ 1 } << prop;
  if ( lhs )
  {
    n->lhs = lhs->node_;
    n->hash = mix( n->hash, lhs->hash() );
    n->size += lhs->size();
    n->props |= lhs->props();
  }
  if ( rhs )
  {
    n->rhs = rhs->node_;
    n->hash = mix( n->hash, rhs->hash() );
    n->size += rhs->size();
    n->props |= rhs->props();
  }
  return Ltl( std::move( n ) );
}

Ltl Ltl::constant( bool value )
{
  // the default constructor delegates here, so build the node directly
  static auto const t = [] {
    auto n = std::make_shared<Node>();
    n->op = Op::True;
    n->hash = mix( static_cast<std::size_t>( Op::True ) * 31u + 7u, 0u );
    return std::shared_ptr<Node const>( n );
  }();
  static auto const f = [] {
    auto n = std::make_shared<Node>();
    n->op = Op::False;
    n->hash = mix( static_cast<std::size_t>( Op::False ) * 31u + 7u, 0u );
    return std::shared_ptr<Node const>( n );
  }();
  return Ltl( value ? t : f );
}

Ltl Ltl::atom( int prop )
{
  if ( prop < 0 || prop >= max_props )
    throw std::out_of_range( "proposition index out of range" );
  return make( Op::Atom, prop, nullptr, nullptr );
}

Ltl operator!( Ltl const& f )
{
  if ( f.op() == Op::True )
    return Ltl::constant( false );
  if ( f.op() == Op::False )
    return Ltl::constant( true );
  return Ltl::make( Op::Not, -1, &f, nullptr );
}

Ltl operator&&( Ltl const& a, Ltl const& b )
{
  if ( a.is_constant( false ) || b.is_constant( false ) )
    return Ltl::constant( false );
  if ( a.is_constant( true ) )
    return b;
  if ( b.is_constant( true ) )
    return a;
  return Ltl::make( Op::And, -1, &a, &b );
}

Ltl operator||( Ltl const& a, Ltl const& b )
{
  if ( a.is_constant( true ) || b.is_constant( true ) )
    return Ltl::constant( true );
  if ( a.is_constant( false ) )
    return b;
  if ( b.is_constant( false ) )
    return a;
  return Ltl::make( Op::Or, -1, &a, &b );
}

Ltl Ltl::next( Ltl const& f )
{
  if ( f.op() == Op::True || f.op() == Op::False )
    return f;
  return make( Op::Next, -1, &f, nullptr );
}

Ltl Ltl::until( Ltl const& a, Ltl const& b )
{
  if ( b.op() == Op::True || b.op() == Op::False )
    return b;
  if ( a.is_constant( false ) )
    return b;
  return make( Op::Until, -1, &a, &b );
}

Ltl Ltl::release( Ltl const& a, Ltl const& b )
{
  if ( b.op() == Op::True || b.op() == Op::False )
    return b;
  if ( a.is_constant( true ) )
    return b;
  return make( Op::Release, -1, &a, &b );
}

Op Ltl::op() const { return node_->op; }
int Ltl::prop() const { return node_->prop; }

Ltl Ltl::lhs() const
{
  if ( !node_->lhs )
    throw std::logic_error( "formula has no left operand" );
  return Ltl( node_->lhs );
}

Ltl Ltl::rhs() const
{
  if ( !node_->rhs )
    throw std::logic_error( "formula has no right operand" );
  return Ltl( node_->rhs );
}

std::size_t Ltl::size() const { return node_->size; }
std::size_t Ltl::hash() const { return node_->hash; }
std::uint64_t Ltl::props() const { return node_->props; }

bool Ltl::operator==( Ltl const& other ) const
{
  if ( node_ == other.node_ )
    return true;
  if ( hash() != other.hash() || op() != other.op() || prop() != other.prop() || size() != other.size() )
    return false;
  if ( node_->lhs && !( lhs() == other.lhs() ) )
    return false;
  if ( node_->rhs && !( rhs() == other.rhs() ) )
    return false;
  return true;
}

std::string Ltl::to_string( std::function<std::string( int )> const& name ) const
{
  switch ( op() )
  {
  case Op::True: return "true";
  case Op::False: return "false";
  case Op::Atom: return name( prop() );
  case Op::Not: return "!" + lhs().to_string( name );
  case Op::Next: return "X " + lhs().to_string( name );
  case Op::And: return "(" + lhs().to_string( name ) + " && " + rhs().to_string( name ) + ")";
  case Op::Or: return "(" + lhs().to_string( name ) + " || " + rhs().to_string( name ) + ")";
  case Op::Until:
    if ( lhs().is_constant( true ) )
      return "F " + rhs().to_string( name );
    return "(" + lhs().to_string( name ) + " U " + rhs().to_string( name ) + ")";
  case Op::Release:
    if ( lhs().is_constant( false ) )
      return "G " + rhs().to_string( name );
    return "(" + lhs().to_string( name ) + " R " + rhs().to_string( name ) + ")";
  }
  return "?";
}

std::string Ltl::to_string() const
{
  return to_string( []( int p ) { return "p" + std::to_string( p ); } );
}

namespace {

Ltl nnf( Ltl const& f, bool negate )
{
  switch ( f.op() )
  {
  case Op::True:
  case Op::False:
    return Ltl::constant( f.is_constant( true ) != negate );
  case Op::Atom:
    return negate ? !f : f;
  case Op::Not:
    return nnf( f.lhs(), !negate );
  case Op::And:
    return negate ? nnf( f.lhs(), true ) || nnf( f.rhs(), true ) : nnf( f.lhs(), false ) && nnf( f.rhs(), false );
  case Op::Or:
    return negate ? nnf( f.lhs(), true ) && nnf( f.rhs(), true ) : nnf( f.lhs(), false ) || nnf( f.rhs(), false );
  case Op::Next:
    return Ltl::next( nnf( f.lhs(), negate ) );
  case Op::Until:
    return negate ? Ltl::release( nnf( f.lhs(), true ), nnf( f.rhs(), true ) )
                  : Ltl::until( nnf( f.lhs(), false ), nnf( f.rhs(), false ) );
  case Op::Release:
    return negate ? Ltl::until( nnf( f.lhs(), true ), nnf( f.rhs(), true ) )
                  : Ltl::release( nnf( f.lhs(), false ), nnf( f.rhs(), false ) );
  }
  return f;
}

} // namespace

Ltl to_nnf( Ltl const& f )
{
  return nnf( f, false );
}

bool is_nnf( Ltl const& f )
{
  switch ( f.op() )
  {
  case Op::True:
  case Op::False:
  case Op::Atom:
    return true;
  case Op::Not:
    return f.lhs().op() == Op::Atom;
  case Op::Next:
    return is_nnf( f.lhs() );
  default:
    return is_nnf( f.lhs() ) && is_nnf( f.rhs() );
  }
}

Letter Lasso::at( std::size_t position ) const
{
  if ( position < stem.size() )
    return stem[position];
  return loop.at( ( position - stem.size() ) % loop.size() );
}

std::vector<bool> evaluate_positions( Ltl const& f, Lasso const& word )
{
  if ( word.loop.empty() )
    throw std::invalid_argument( "lasso loop must be non-empty" );
  auto const n = word.length();
  auto const succ = [&]( std::size_t i ) { return i + 1 < n ? i + 1 : word.stem.size(); };

  std::unordered_map<void const*, std::vector<bool>> memo;
  std::function<std::vector<bool> const&( Ltl const& )> eval = [&]( Ltl const& g ) -> std::vector<bool> const& {
    if ( auto it = memo.find( g.id() ); it != memo.end() )
      return it->second;
    std::vector<bool> out( n, false );
    switch ( g.op() )
    {
    case Op::True:
      out.assign( n, true );
      break;
    case Op::False:
      break;
    case Op::Atom:
      for ( std::size_t i = 0; i < n; ++i )
        out[i] = ( word.at( i ) >> g.prop() ) & 1u;
      break;
    case Op::Not:
    {
      auto const& a = eval( g.lhs() );
      for ( std::size_t i = 0; i < n; ++i )
        out[i] = !a[i];
      break;
    }
    case Op::And:
    case Op::Or:
    {
      auto const& a = eval( g.lhs() );
      auto const& b = eval( g.rhs() );
      for ( std::size_t i = 0; i < n; ++i )
        out[i] = g.op() == Op::And ? ( a[i] && b[i] ) : ( a[i] || b[i] );
      break;
    }
    case Op::Next:
    {
      auto const& a = eval( g.lhs() );
      for ( std::size_t i = 0; i < n; ++i )
        out[i] = a[succ( i )];
      break;
    }
    case Op::Until:
    case Op::Release:
    {
      auto const& a = eval( g.lhs() );
      auto const& b = eval( g.rhs() );
      bool const until = g.op() == Op::Until;
      // least fixpoint for U, greatest for R
      out.assign( n, !until );
      for ( bool changed = true; changed; )
      {
        changed = false;
        for ( std::size_t k = n; k-- > 0; )
        {
          bool const v = until ? ( b[k] || ( a[k] && out[succ( k )] ) ) : ( b[k] && ( a[k] || out[succ( k )] ) );
          if ( v != out[k] )
          {
            out[k] = v;
            changed = true;
          }
        }
      }
      break;
    }
    }
    return memo.emplace( g.id(), std::move( out ) ).first->second;
  };
  return eval( f );
}

bool evaluate( Ltl const& f, Lasso const& word )
{
  return evaluate_positions( f, word ).front();
}

// ---------------------------------------------------------------------------

int PropDictionary::find_name( std::string const& name ) const
{
  for ( int i = 0; i < size(); ++i )
    if ( props[static_cast<std::size_t>( i )].name == name )
      return i;
  return -1;
}

int PropDictionary::find_term( std::string const& term ) const
{
  for ( int i = 0; i < size(); ++i )
    if ( props[static_cast<std::size_t>( i )].term == term )
      return i;
  return -1;
}

Letter PropDictionary::input_mask() const
{
  return num_inputs >= 64 ? ~Letter{ 0 } : ( Letter{ 1 } << num_inputs ) - 1u;
}

Letter PropDictionary::output_mask() const
{
  Letter all = size() >= 64 ? ~Letter{ 0 } : ( Letter{ 1 } << size() ) - 1u;
  return all & ~input_mask();
}

bool PropDictionary::operator==( PropDictionary const& other ) const
{
  if ( num_inputs != other.num_inputs || props.size() != other.props.size() || groups.size() != other.groups.size() )
    return false;
  for ( std::size_t i = 0; i < props.size(); ++i )
  {
    auto const& a = props[i];
    auto const& b = other.props[i];
    if ( a.name != b.name || a.term != b.term || a.input != b.input || a.signal != b.signal )
      return false;
  }
  for ( std::size_t i = 0; i < groups.size(); ++i )
    if ( groups[i].signal != other.groups[i].signal || groups[i].alternatives != other.groups[i].alternatives )
      return false;
  return true;
}

std::string prop_name_for( std::string const& prefix, std::string const& text )
{
  std::string out = prefix;
  for ( char c : text )
  {
    if ( std::isalnum( static_cast<unsigned char>( c ) ) )
      out += c;
    else if ( !out.empty() && out.back() != '_' )
      out += '_';
  }
  while ( !out.empty() && out.back() == '_' )
    out.pop_back();
  return out;
}

namespace {

struct PendingProp
{
  std::string term;
  std::string signal;
  bool input;
};

} // namespace

Ltl abstract_formula( spec::FormulaPtr const& f, PropDictionary const& dict )
{
  using spec::Op;
  switch ( f->op )
  {
  case Op::True: return Ltl::constant( true );
  case Op::False: return Ltl::constant( false );
  case Op::Predicate:
  case Op::Update:
  {
    auto const term = spec::to_string( *f );
    auto const id = dict.find_term( term );
    if ( id < 0 )
      throw std::invalid_argument( "term not in proposition dictionary: " + term );
    return Ltl::atom( id );
  }
  case Op::Not: return !abstract_formula( f->lhs, dict );
  case Op::And: return abstract_formula( f->lhs, dict ) && abstract_formula( f->rhs, dict );
  case Op::Or: return abstract_formula( f->lhs, dict ) || abstract_formula( f->rhs, dict );
  case Op::Next: return Ltl::next( abstract_formula( f->lhs, dict ) );
  case Op::Until: return Ltl::until( abstract_formula( f->lhs, dict ), abstract_formula( f->rhs, dict ) );
  case Op::Release: return Ltl::release( abstract_formula( f->lhs, dict ), abstract_formula( f->rhs, dict ) );
  default:
    return abstract_formula( spec::desugar( f ), dict );
  }
}

LtlSpec abstract_to_ltl( spec::CoreSpec const& core )
{
  std::map<std::string, PendingProp> inputs;  // keyed by term text
  std::map<std::string, PendingProp> outputs; // keyed by term text

  auto collect = [&]( spec::FormulaPtr const& f ) {
    if ( !f )
      return;
    spec::for_each_atom( *f, [&]( spec::Formula const& atom ) {
      auto term = spec::to_string( atom );
      if ( atom.op == spec::Op::Predicate )
        inputs.emplace( term, PendingProp{ term, {}, true } );
      else
        outputs.emplace( term, PendingProp{ term, atom.name, false } );
    } );
  };
  collect( core.assumptions );
  collect( core.guarantees );

  // cells written by an update may also keep their value
  for ( auto const& cell : core.signals.written_cells )
  {
    auto idle = spec::to_string( *spec::Formula::update( cell, spec::FunctionTerm::signal( cell ) ) );
    outputs.emplace( idle, PendingProp{ idle, cell, false } );
  }

  LtlSpec out;
  out.signals = core.signals;
  std::set<std::string> used_names;
  auto add_block = [&]( std::map<std::string, PendingProp> const& block, std::string const& prefix ) {
    std::vector<PropInfo> infos;
    for ( auto const& [term, p] : block )
    {
      auto text = p.input ? term : p.signal + " " + term.substr( term.find( "<-" ) + 2 );
      auto name = prop_name_for( prefix, text );
      auto base = name;
      for ( int k = 2; used_names.count( name ); ++k )
        name = base + "_" + std::to_string( k );
      used_names.insert( name );
      infos.push_back( PropInfo{ name, term, p.input, p.signal } );
    }
    std::sort( infos.begin(), infos.end(), []( auto const& a, auto const& b ) { return a.name < b.name; } );
    out.dict.props.insert( out.dict.props.end(), infos.begin(), infos.end() );
  };
  add_block( inputs, "p_" );
  out.dict.num_inputs = static_cast<int>( inputs.size() );
  add_block( outputs, "u_" );
  if ( out.dict.size() > max_props )
    throw std::invalid_argument( "specification has more than 64 propositions" );

  std::map<std::string, std::vector<int>> groups;
  for ( int i = out.dict.num_inputs; i < out.dict.size(); ++i )
    groups[out.dict.props[static_cast<std::size_t>( i )].signal].push_back( i );
  for ( auto& [signal, alts] : groups )
    out.dict.groups.push_back( OutputGroup{ signal, alts } );

  auto to_conjuncts = [&]( spec::FormulaPtr const& f ) {
    std::vector<Conjunct> cs;
    if ( !f )
      return cs;
    for ( auto const& c : spec::conjuncts( f ) )
      cs.push_back( Conjunct{ abstract_formula( c, out.dict ), spec::to_string( *c ) } );
    return cs;
  };
  out.assumptions = to_conjuncts( core.assumptions );
  out.guarantees = to_conjuncts( core.guarantees );

  auto conj = []( std::vector<Conjunct> const& cs ) {
    Ltl acc = Ltl::constant( true );
    for ( auto const& c : cs )
      acc = acc && c.formula;
    return acc;
  };

  for ( auto const& g : out.dict.groups )
  {
    Ltl some = Ltl::constant( false );
    Ltl at_most_one = Ltl::constant( true );
    for ( std::size_t i = 0; i < g.alternatives.size(); ++i )
    {
      some = some || Ltl::atom( g.alternatives[i] );
      for ( std::size_t j = i + 1; j < g.alternatives.size(); ++j )
        at_most_one = at_most_one && !( Ltl::atom( g.alternatives[i] ) && Ltl::atom( g.alternatives[j] ) );
    }
    std::string text = "exactly one update of " + g.signal;
    out.exclusivity.push_back( Conjunct{ Ltl::globally( some && at_most_one ), text } );
  }

  out.formula = Ltl::implies( conj( out.assumptions ), conj( out.guarantees ) ) && conj( out.exclusivity );
  return out;
}

} // namespace tslagent::ltl
