#include <tslagent/spec.hpp>

#include <cctype>
#include <optional>

namespace tslagent::spec {

namespace {

enum class Tok
{
  Ident,
  Number,
  LParen,
  RParen,
  LBracket,
  RBracket,
  LBrace,
  RBrace,
  Semi,
  Comma,
  Bang,
  AndAnd,
  OrOr,
  Implies, // ->
  Iff,     // <->
  Assign,  // <-
  Plus,
  End,
};

struct Token
{
  Tok kind = Tok::End;
  std::string text;
  SourceSpan span;
};

std::string describe( Token const& t )
{
  if ( t.kind == Tok::End )
    return "end of input";
  return "'" + t.text + "'";
}

class Lexer
{
public:
  explicit Lexer( std::string_view src ) : src_( src ) {}

  std::vector<Token> run()
  {
    std::vector<Token> out;
    for ( ;; )
    {
      skip_space_and_comments();
      SourceSpan span{ line_, col_ };
      if ( pos_ >= src_.size() )
      {
        out.push_back( { Tok::End, "", span } );
        return out;
      }
      char const c = src_[pos_];
      if ( std::isalpha( static_cast<unsigned char>( c ) ) || c == '_' )
      {
        std::size_t start = pos_;
        while ( pos_ < src_.size() && ( std::isalnum( static_cast<unsigned char>( src_[pos_] ) ) || src_[pos_] == '_' ) )
          advance();
        out.push_back( { Tok::Ident, std::string( src_.substr( start, pos_ - start ) ), span } );
        continue;
      }
      if ( std::isdigit( static_cast<unsigned char>( c ) ) )
      {
        std::size_t start = pos_;
        while ( pos_ < src_.size() && std::isdigit( static_cast<unsigned char>( src_[pos_] ) ) )
          advance();
        out.push_back( { Tok::Number, std::string( src_.substr( start, pos_ - start ) ), span } );
        continue;
      }
      auto const rest = src_.substr( pos_ );
      auto emit = [&]( Tok kind, std::size_t len ) {
        out.push_back( { kind, std::string( rest.substr( 0, len ) ), span } );
        for ( std::size_t i = 0; i < len; ++i )
          advance();
      };
      if ( rest.starts_with( "<->" ) )
        emit( Tok::Iff, 3 );
      else if ( rest.starts_with( "<-" ) )
        emit( Tok::Assign, 2 );
      else if ( rest.starts_with( "->" ) )
        emit( Tok::Implies, 2 );
      else if ( rest.starts_with( "&&" ) )
        emit( Tok::AndAnd, 2 );
      else if ( rest.starts_with( "||" ) )
        emit( Tok::OrOr, 2 );
      else
      {
        switch ( c )
        {
        case '(': emit( Tok::LParen, 1 ); break;
        case ')': emit( Tok::RParen, 1 ); break;
        case '[': emit( Tok::LBracket, 1 ); break;
        case ']': emit( Tok::RBracket, 1 ); break;
        case '{': emit( Tok::LBrace, 1 ); break;
        case '}': emit( Tok::RBrace, 1 ); break;
        case ';': emit( Tok::Semi, 1 ); break;
        case ',': emit( Tok::Comma, 1 ); break;
        case '!': emit( Tok::Bang, 1 ); break;
        case '+': emit( Tok::Plus, 1 ); break;
        default:
        {
          std::string bad( 1, c );
          // keep multi-byte UTF-8 sequences together in the message
          for ( std::size_t i = pos_ + 1; i < src_.size() && ( static_cast<unsigned char>( src_[i] ) & 0xC0 ) == 0x80; ++i )
            bad += src_[i];
          throw SpecError( SpecError::Kind::Lexical, "unexpected character '" + bad + "'", span, bad );
        }
        }
      }
    }
  }

private:
  void advance()
  {
    if ( src_[pos_] == '\n' )
    {
      ++line_;
      col_ = 1;
    }
    else if ( ( static_cast<unsigned char>( src_[pos_] ) & 0xC0 ) != 0x80 )
    {
      ++col_;
    }
    ++pos_;
  }

  void skip_space_and_comments()
  {
    while ( pos_ < src_.size() )
    {
      if ( std::isspace( static_cast<unsigned char>( src_[pos_] ) ) )
        advance();
      else if ( src_.substr( pos_ ).starts_with( "//" ) )
        while ( pos_ < src_.size() && src_[pos_] != '\n' )
          advance();
      else
        break;
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool is_temporal_letter( Token const& t, char letter )
{
  return t.kind == Tok::Ident && t.text.size() == 1u && t.text[0] == letter;
}

bool is_reserved( std::string const& s )
{
  return s == "X" || s == "G" || s == "F" || s == "U" || s == "W" || s == "R" || s == "true" || s == "false";
}

class Parser
{
public:
  explicit Parser( std::vector<Token> tokens ) : toks_( std::move( tokens ) ) {}

  SpecAst spec()
  {
    SpecAst ast;
    while ( peek().kind != Tok::End )
      ast.sections.push_back( section() );
    return ast;
  }

  FormulaPtr single_formula()
  {
    auto f = formula();
    if ( peek().kind == Tok::Semi )
      next();
    expect_end();
    return f;
  }

  FunctionTermPtr single_term()
  {
    auto t = fterm();
    expect_end();
    return t;
  }

private:
  Token const& peek( std::size_t ahead = 0 ) const
  {
    auto i = std::min( pos_ + ahead, toks_.size() - 1u );
    return toks_[i];
  }

  Token const& next() { return toks_[std::min( pos_++, toks_.size() - 1u )]; }

  [[noreturn]] void fail( std::string message, Token const& at ) const
  {
    throw SpecError( SpecError::Kind::Syntax, std::move( message ), at.span, at.text );
  }

  void expect_end() const
  {
    if ( peek().kind != Tok::End )
      fail( "unexpected " + describe( peek() ) + " after formula", peek() );
  }

  Section section()
  {
    auto const& kw = peek();
    if ( kw.kind != Tok::Ident )
      fail( "expected a block keyword, found " + describe( kw ), kw );
    Section s;
    s.span = kw.span;
    if ( kw.text == "initially" || kw.text == "always" )
    {
      bool const always = kw.text == "always";
      next();
      auto const& which = peek();
      if ( which.kind == Tok::Ident && which.text == "assume" )
        s.kind = always ? SectionKind::AlwaysAssume : SectionKind::InitiallyAssume;
      else if ( which.kind == Tok::Ident && which.text == "guarantee" )
        s.kind = always ? SectionKind::AlwaysGuarantee : SectionKind::InitiallyGuarantee;
      else
        fail( "expected 'assume' or 'guarantee' after '" + kw.text + "', found " + describe( which ), which );
      next();
    }
    else if ( kw.text == "guarantee" )
    {
      s.kind = SectionKind::Guarantee;
      next();
    }
    else
    {
      fail( "expected a block keyword, found " + describe( kw ), kw );
    }

    auto const open = peek();
    if ( open.kind != Tok::LBrace )
      fail( "expected '{' to open block, found " + describe( open ), open );
    next();

    for ( ;; )
    {
      auto const& t = peek();
      if ( t.kind == Tok::RBrace )
      {
        next();
        break;
      }
      if ( t.kind == Tok::End )
        throw SpecError( SpecError::Kind::UnbalancedBlock,
                         "unbalanced block: '{' opened at " + std::to_string( open.span.line ) + ":" +
                             std::to_string( open.span.column ) + " is never closed",
                         t.span, t.text );
      s.formulas.push_back( formula() );
      auto const& sep = peek();
      if ( sep.kind == Tok::Semi )
        next();
      else if ( sep.kind != Tok::RBrace )
      {
        if ( sep.kind == Tok::End )
          throw SpecError( SpecError::Kind::UnbalancedBlock,
                           "unbalanced block: '{' opened at " + std::to_string( open.span.line ) + ":" +
                               std::to_string( open.span.column ) + " is never closed",
                           sep.span, sep.text );
        fail( "expected ';' or '}' after formula, found " + describe( sep ), sep );
      }
    }
    return s;
  }

  // precedence, loosest first: <->, -> (right), ||, &&, U/W/R (right), unary
  FormulaPtr formula() { return iff(); }

  FormulaPtr iff()
  {
    auto lhs = implies();
    while ( peek().kind == Tok::Iff )
    {
      auto span = next().span;
      lhs = Formula::binary( Op::Iff, lhs, implies(), span );
    }
    return lhs;
  }

  FormulaPtr implies()
  {
    auto lhs = disjunction();
    if ( peek().kind == Tok::Implies )
    {
      auto span = next().span;
      return Formula::binary( Op::Implies, lhs, implies(), span );
    }
    return lhs;
  }

  FormulaPtr disjunction()
  {
    auto lhs = conjunction();
    while ( peek().kind == Tok::OrOr )
    {
      auto span = next().span;
      lhs = Formula::binary( Op::Or, lhs, conjunction(), span );
    }
    return lhs;
  }

  FormulaPtr conjunction()
  {
    auto lhs = temporal_binary();
    while ( peek().kind == Tok::AndAnd )
    {
      auto span = next().span;
      lhs = Formula::binary( Op::And, lhs, temporal_binary(), span );
    }
    return lhs;
  }

  FormulaPtr temporal_binary()
  {
    auto lhs = unary();
    auto const& t = peek();
    std::optional<Op> op;
    if ( is_temporal_letter( t, 'U' ) )
      op = Op::Until;
    else if ( is_temporal_letter( t, 'W' ) )
      op = Op::WeakUntil;
    else if ( is_temporal_letter( t, 'R' ) )
      op = Op::Release;
    if ( !op )
      return lhs;
    auto span = next().span;
    return Formula::binary( *op, lhs, temporal_binary(), span );
  }

  FormulaPtr unary()
  {
    auto const& t = peek();
    if ( t.kind == Tok::Bang )
    {
      auto span = next().span;
      return Formula::unary( Op::Not, unary(), span );
    }
    if ( t.kind == Tok::Ident )
    {
      std::optional<Op> op;
      if ( t.text == "X" )
        op = Op::Next;
      else if ( t.text == "G" )
        op = Op::Globally;
      else if ( t.text == "F" )
        op = Op::Finally;
      if ( op )
      {
        auto span = next().span;
        return Formula::unary( *op, unary(), span );
      }
    }
    return atom();
  }

  FormulaPtr atom()
  {
    auto const t = peek();
    switch ( t.kind )
    {
    case Tok::LParen:
    {
      next();
      auto f = formula();
      if ( peek().kind != Tok::RParen )
        fail( "expected ')' to close '(' opened at " + std::to_string( t.span.line ) + ":" +
                  std::to_string( t.span.column ) + ", found " + describe( peek() ),
              peek() );
      next();
      return f;
    }
    case Tok::LBracket:
    {
      next();
      auto const target = peek();
      if ( target.kind != Tok::Ident || is_reserved( target.text ) )
        fail( "expected an output signal after '[', found " + describe( target ), target );
      next();
      if ( peek().kind != Tok::Assign )
        fail( "expected '<-' in update term, found " + describe( peek() ), peek() );
      next();
      auto value = fterm();
      if ( peek().kind != Tok::RBracket )
        fail( "unclosed '[' update term opened at " + std::to_string( t.span.line ) + ":" +
                  std::to_string( t.span.column ) + ": expected ']', found " + describe( peek() ),
              peek() );
      next();
      return Formula::update( target.text, std::move( value ), t.span );
    }
    case Tok::Ident:
    {
      if ( t.text == "true" || t.text == "false" )
      {
        next();
        return Formula::constant( t.text == "true", t.span );
      }
      if ( is_reserved( t.text ) )
        fail( "unexpected temporal operator " + describe( t ), t );
      next();
      std::vector<FunctionTermPtr> args;
      if ( peek().kind == Tok::LParen )
        args = arguments();
      return Formula::predicate( t.text, std::move( args ), t.span );
    }
    default:
      fail( "expected a formula, found " + describe( t ), t );
    }
  }

  std::vector<FunctionTermPtr> arguments()
  {
    auto const open = next(); // '('
    std::vector<FunctionTermPtr> args;
    if ( peek().kind == Tok::RParen )
    {
      next();
      return args;
    }
    for ( ;; )
    {
      args.push_back( fterm() );
      if ( peek().kind == Tok::Comma )
      {
        next();
        continue;
      }
      if ( peek().kind != Tok::RParen )
        fail( "expected ',' or ')' in argument list opened at " + std::to_string( open.span.line ) + ":" +
                  std::to_string( open.span.column ) + ", found " + describe( peek() ),
              peek() );
      next();
      return args;
    }
  }

  FunctionTermPtr fterm()
  {
    auto lhs = fprimary();
    while ( peek().kind == Tok::Plus )
    {
      auto span = next().span;
      lhs = FunctionTerm::apply( "add", { lhs, fprimary() }, span );
    }
    return lhs;
  }

  FunctionTermPtr fprimary()
  {
    auto const t = peek();
    if ( t.kind == Tok::Number )
    {
      next();
      return FunctionTerm::apply( t.text, {}, t.span );
    }
    if ( t.kind == Tok::LParen )
    {
      next();
      auto inner = fterm();
      if ( peek().kind != Tok::RParen )
        fail( "expected ')' in function term, found " + describe( peek() ), peek() );
      next();
      return inner;
    }
    if ( t.kind != Tok::Ident || is_reserved( t.text ) )
      fail( "expected a function term, found " + describe( t ), t );
    next();
    if ( peek().kind == Tok::LParen )
      return FunctionTerm::apply( t.text, arguments(), t.span );
    return FunctionTerm::signal( t.text, t.span );
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

} // namespace

SpecAst parse_spec( std::string_view text )
{
  Parser p( Lexer( text ).run() );
  return p.spec();
}

FormulaPtr parse_formula( std::string_view text )
{
  Parser p( Lexer( text ).run() );
  return p.single_formula();
}

FunctionTermPtr parse_function_term( std::string_view text )
{
  Parser p( Lexer( text ).run() );
  return p.single_term();
}

} // namespace tslagent::spec
