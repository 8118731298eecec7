#include <tslagent/spec.hpp>

#include <algorithm>
#include <cctype>
#include <sstream>

namespace tslagent::spec {

FunctionTermPtr FunctionTerm::signal( std::string name, SourceSpan span )
{
  auto t = std::make_shared<FunctionTerm>();
  t->kind = Kind::Signal;
  t->name = std::move( name );
  t->span = span;
  return t;
}

FunctionTermPtr FunctionTerm::apply( std::string name, std::vector<FunctionTermPtr> args, SourceSpan span )
{
  auto t = std::make_shared<FunctionTerm>();
  t->kind = Kind::Application;
  t->name = std::move( name );
  t->args = std::move( args );
  t->span = span;
  return t;
}

bool FunctionTerm::is_literal() const
{
  return kind == Kind::Application && args.empty() && !name.empty() &&
         std::all_of( name.begin(), name.end(), []( unsigned char c ) { return std::isdigit( c ); } );
}

bool same_structure( FunctionTerm const& a, FunctionTerm const& b )
{
  if ( a.kind != b.kind || a.name != b.name || a.args.size() != b.args.size() )
    return false;
  for ( std::size_t i = 0; i < a.args.size(); ++i )
    if ( !same_structure( *a.args[i], *b.args[i] ) )
      return false;
  return true;
}

std::string to_string( FunctionTerm const& t )
{
  if ( t.kind == FunctionTerm::Kind::Signal || t.is_literal() )
    return t.name;
  if ( t.name == "add" && t.args.size() == 2u )
  {
    // infix form; a right operand that is itself a sum needs parentheses
    auto rhs = to_string( *t.args[1] );
    if ( t.args[1]->kind == FunctionTerm::Kind::Application && t.args[1]->name == "add" && t.args[1]->args.size() == 2u )
      rhs = "(" + rhs + ")";
    return to_string( *t.args[0] ) + " + " + rhs;
  }
  std::string out = t.name + "(";
  for ( std::size_t i = 0; i < t.args.size(); ++i )
  {
    if ( i )
      out += ", ";
    out += to_string( *t.args[i] );
  }
  return out + ")";
}

FormulaPtr Formula::constant( bool value, SourceSpan span )
{
  auto f = std::make_shared<Formula>();
  f->op = value ? Op::True : Op::False;
  f->span = span;
  return f;
}

FormulaPtr Formula::predicate( std::string name, std::vector<FunctionTermPtr> args, SourceSpan span )
{
  auto f = std::make_shared<Formula>();
  f->op = Op::Predicate;
  f->name = std::move( name );
  f->args = std::move( args );
  f->span = span;
  return f;
}

FormulaPtr Formula::update( std::string target, FunctionTermPtr value, SourceSpan span )
{
  auto f = std::make_shared<Formula>();
  f->op = Op::Update;
  f->name = std::move( target );
  f->value = std::move( value );
  f->span = span;
  return f;
}

FormulaPtr Formula::unary( Op op, FormulaPtr child, SourceSpan span )
{
  auto f = std::make_shared<Formula>();
  f->op = op;
  f->lhs = std::move( child );
  f->span = span;
  return f;
}

FormulaPtr Formula::binary( Op op, FormulaPtr lhs, FormulaPtr rhs, SourceSpan span )
{
  auto f = std::make_shared<Formula>();
  f->op = op;
  f->lhs = std::move( lhs );
  f->rhs = std::move( rhs );
  f->span = span;
  return f;
}

bool Formula::is_unary() const
{
  return op == Op::Not || op == Op::Next || op == Op::Globally || op == Op::Finally;
}

bool Formula::is_binary() const
{
  switch ( op )
  {
  case Op::And:
  case Op::Or:
  case Op::Implies:
  case Op::Iff:
  case Op::Until:
  case Op::WeakUntil:
  case Op::Release:
    return true;
  default:
    return false;
  }
}

bool same_structure( Formula const& a, Formula const& b )
{
  if ( a.op != b.op )
    return false;
  switch ( a.op )
  {
  case Op::True:
  case Op::False:
    return true;
  case Op::Predicate:
    if ( a.name != b.name || a.args.size() != b.args.size() )
      return false;
    for ( std::size_t i = 0; i < a.args.size(); ++i )
      if ( !same_structure( *a.args[i], *b.args[i] ) )
        return false;
    return true;
  case Op::Update:
    return a.name == b.name && same_structure( *a.value, *b.value );
  default:
    break;
  }
  if ( !same_structure( *a.lhs, *b.lhs ) )
    return false;
  if ( a.is_binary() )
    return same_structure( *a.rhs, *b.rhs );
  return true;
}

namespace {

std::string_view op_token( Op op )
{
  switch ( op )
  {
  case Op::Not: return "!";
  case Op::Next: return "X";
  case Op::Globally: return "G";
  case Op::Finally: return "F";
  case Op::And: return "&&";
  case Op::Or: return "||";
  case Op::Implies: return "->";
  case Op::Iff: return "<->";
  case Op::Until: return "U";
  case Op::WeakUntil: return "W";
  case Op::Release: return "R";
  default: return "?";
  }
}

} // namespace

std::string to_string( Formula const& f )
{
  switch ( f.op )
  {
  case Op::True: return "true";
  case Op::False: return "false";
  case Op::Predicate:
  {
    if ( f.args.empty() )
      return f.name;
    std::string out = f.name + "(";
    for ( std::size_t i = 0; i < f.args.size(); ++i )
    {
      if ( i )
        out += ", ";
      out += to_string( *f.args[i] );
    }
    return out + ")";
  }
  case Op::Update:
    return "[" + f.name + " <- " + to_string( *f.value ) + "]";
  default:
    break;
  }
  if ( f.is_unary() )
  {
    auto const child = to_string( *f.lhs );
    if ( f.op == Op::Not )
      return "!" + child;
    return std::string( op_token( f.op ) ) + " " + child;
  }
  return "(" + to_string( *f.lhs ) + " " + std::string( op_token( f.op ) ) + " " + to_string( *f.rhs ) + ")";
}

std::size_t count_nodes( Formula const& f, Op op )
{
  std::size_t n = f.op == op ? 1u : 0u;
  if ( f.lhs )
    n += count_nodes( *f.lhs, op );
  if ( f.rhs )
    n += count_nodes( *f.rhs, op );
  return n;
}

std::vector<FormulaPtr> conjuncts( FormulaPtr const& f )
{
  std::vector<FormulaPtr> out;
  std::vector<FormulaPtr> stack{ f };
  while ( !stack.empty() )
  {
    auto g = stack.back();
    stack.pop_back();
    if ( g->op == Op::And )
    {
      stack.push_back( g->rhs );
      stack.push_back( g->lhs );
    }
    else if ( g->op != Op::True )
    {
      out.push_back( g );
    }
  }
  return out;
}

std::string_view keyword( SectionKind kind )
{
  switch ( kind )
  {
  case SectionKind::InitiallyAssume: return "initially assume";
  case SectionKind::AlwaysAssume: return "always assume";
  case SectionKind::InitiallyGuarantee: return "initially guarantee";
  case SectionKind::Guarantee: return "guarantee";
  case SectionKind::AlwaysGuarantee: return "always guarantee";
  }
  return "";
}

bool is_assumption( SectionKind kind )
{
  return kind == SectionKind::InitiallyAssume || kind == SectionKind::AlwaysAssume;
}

bool is_always( SectionKind kind )
{
  return kind == SectionKind::AlwaysAssume || kind == SectionKind::AlwaysGuarantee;
}

std::size_t SpecAst::count( SectionKind kind ) const
{
  std::size_t n = 0;
  for ( auto const& s : sections )
    if ( s.kind == kind )
      n += s.formulas.size();
  return n;
}

bool same_structure( SpecAst const& a, SpecAst const& b )
{
  if ( a.sections.size() != b.sections.size() )
    return false;
  for ( std::size_t i = 0; i < a.sections.size(); ++i )
  {
    auto const& x = a.sections[i];
    auto const& y = b.sections[i];
    if ( x.kind != y.kind || x.formulas.size() != y.formulas.size() )
      return false;
    for ( std::size_t j = 0; j < x.formulas.size(); ++j )
      if ( !same_structure( *x.formulas[j], *y.formulas[j] ) )
        return false;
  }
  return true;
}

std::string to_string( SpecAst const& ast )
{
  std::ostringstream os;
  bool first = true;
  for ( auto const& s : ast.sections )
  {
    if ( !first )
      os << '\n';
    first = false;
    os << keyword( s.kind ) << " {\n";
    for ( auto const& f : s.formulas )
      os << "    " << to_string( *f ) << ";\n";
    os << "}\n";
  }
  return os.str();
}

SpecAst compose( std::vector<SpecAst> const& parts )
{
  SpecAst out;
  for ( auto const& p : parts )
    out.sections.insert( out.sections.end(), p.sections.begin(), p.sections.end() );
  return out;
}

SpecError::SpecError( Kind kind, std::string message, SourceSpan span, std::string token )
    : std::runtime_error( std::to_string( span.line ) + ":" + std::to_string( span.column ) + ": " + message ),
      kind_( kind ), message_( std::move( message ) ), span_( span ), token_( std::move( token ) )
{
}

std::string SpecError::diagnostic( std::string_view source, std::string_view filename ) const
{
  std::ostringstream os;
  if ( !filename.empty() )
    os << filename << ':';
  os << span_.line << ':' << span_.column << ": error: " << message_ << '\n';
  if ( span_.line <= 0 )
    return os.str();

  std::size_t start = 0;
  for ( int line = 1; line < span_.line && start < source.size(); ++line )
  {
    auto nl = source.find( '\n', start );
    if ( nl == std::string_view::npos )
    {
      start = source.size();
      break;
    }
    start = nl + 1;
  }
  auto end = source.find( '\n', start );
  auto excerpt = source.substr( start, end == std::string_view::npos ? std::string_view::npos : end - start );
  os << "  " << excerpt << '\n';
  os << "  " << std::string( static_cast<std::size_t>( std::max( 0, span_.column - 1 ) ), ' ' ) << "^\n";
  return os.str();
}

} // namespace tslagent::spec
