#include <tslagent/spec.hpp>

#include <functional>

namespace tslagent::spec {

FormulaPtr desugar( FormulaPtr const& f )
{
  switch ( f->op )
  {
  case Op::True:
  case Op::False:
  case Op::Predicate:
  case Op::Update:
    return f;
  case Op::Not:
  case Op::Next:
    return Formula::unary( f->op, desugar( f->lhs ), f->span );
  case Op::And:
  case Op::Or:
  case Op::Until:
  case Op::Release:
    return Formula::binary( f->op, desugar( f->lhs ), desugar( f->rhs ), f->span );
  case Op::Implies:
    return Formula::binary( Op::Or, Formula::unary( Op::Not, desugar( f->lhs ) ), desugar( f->rhs ), f->span );
  case Op::Iff:
  {
    auto a = desugar( f->lhs );
    auto b = desugar( f->rhs );
    return Formula::binary( Op::And,
                            Formula::binary( Op::Or, Formula::unary( Op::Not, a ), b ),
                            Formula::binary( Op::Or, Formula::unary( Op::Not, b ), a ), f->span );
  }
  case Op::Globally:
    return Formula::binary( Op::Release, Formula::constant( false ), desugar( f->lhs ), f->span );
  case Op::Finally:
    return Formula::binary( Op::Until, Formula::constant( true ), desugar( f->lhs ), f->span );
  case Op::WeakUntil:
  {
    auto a = desugar( f->lhs );
    auto b = desugar( f->rhs );
    return Formula::binary( Op::Or, Formula::binary( Op::Until, a, b ),
                            Formula::binary( Op::Release, Formula::constant( false ), a ), f->span );
  }
  }
  return f;
}

bool is_core( Formula const& f )
{
  switch ( f.op )
  {
  case Op::Implies:
  case Op::Iff:
  case Op::Globally:
  case Op::Finally:
  case Op::WeakUntil:
    return false;
  default:
    break;
  }
  return ( !f.lhs || is_core( *f.lhs ) ) && ( !f.rhs || is_core( *f.rhs ) );
}

CoreSpec desugar( SpecAst const& ast )
{
  std::vector<FormulaPtr> assume;
  std::vector<FormulaPtr> guarantee;
  for ( auto const& section : ast.sections )
  {
    auto& target = is_assumption( section.kind ) ? assume : guarantee;
    for ( auto const& f : section.formulas )
    {
      auto core = desugar( f );
      if ( is_always( section.kind ) )
        core = Formula::binary( Op::Release, Formula::constant( false ), core, f->span );
      target.push_back( core );
    }
  }
  auto conjoin = []( std::vector<FormulaPtr> const& parts ) {
    if ( parts.empty() )
      return Formula::constant( true );
    auto acc = parts.front();
    for ( std::size_t i = 1; i < parts.size(); ++i )
      acc = Formula::binary( Op::And, acc, parts[i] );
    return acc;
  };
  CoreSpec core;
  core.assumptions = conjoin( assume );
  core.guarantees = conjoin( guarantee );
  return core;
}

namespace {

enum class SymbolKind { Predicate, Function, Signal };

struct SymbolUse
{
  SymbolKind kind;
  std::size_t arity;
  SourceSpan span;
  bool update_target = false;
};

class SignalCollector
{
public:
  void formula( Formula const& f )
  {
    for_each_atom( f, [this]( Formula const& atom ) {
      if ( atom.op == Op::Predicate )
      {
        use( atom.name, SymbolKind::Predicate, atom.args.size(), atom.span );
        table.predicates[atom.name] = atom.args.size();
        if ( atom.args.empty() )
          table.inputs.insert( atom.name );
        for ( auto const& a : atom.args )
          term( *a );
      }
      else
      {
        use( atom.name, SymbolKind::Signal, 0, atom.span, true );
        written.insert( atom.name );
        term( *atom.value );
      }
    } );
  }

  SignalTable finish()
  {
    for ( auto const& r : read )
      table.cells.insert( r );
    for ( auto const& w : written )
    {
      if ( read.count( w ) )
        table.written_cells.insert( w );
      else
        table.outputs.insert( w );
    }
    return table;
  }

private:
  void term( FunctionTerm const& t )
  {
    if ( t.kind == FunctionTerm::Kind::Signal )
    {
      use( t.name, SymbolKind::Signal, 0, t.span );
      read.insert( t.name );
      return;
    }
    if ( !t.is_literal() )
    {
      use( t.name, SymbolKind::Function, t.args.size(), t.span );
      table.functions[t.name] = t.args.size();
    }
    for ( auto const& a : t.args )
      term( *a );
  }

  void use( std::string const& name, SymbolKind kind, std::size_t arity, SourceSpan span, bool target = false )
  {
    auto [it, fresh] = seen_.emplace( name, SymbolUse{ kind, arity, span, target } );
    if ( fresh )
      return;
    auto& prev = it->second;
    bool const prev_signal = prev.kind == SymbolKind::Signal;
    bool const now_signal = kind == SymbolKind::Signal;
    if ( ( prev_signal && prev.update_target && kind == SymbolKind::Function ) ||
         ( target && prev.kind == SymbolKind::Function ) )
      throw SpecError( SpecError::Kind::Semantic, "update target '" + name + "' used as function symbol",
                       kind == SymbolKind::Function ? span : prev.span, name );
    if ( prev_signal && now_signal )
    {
      prev.update_target = prev.update_target || target;
      return;
    }
    // a zero-arity predicate doubles as a boolean input signal
    if ( ( prev.kind == SymbolKind::Predicate && now_signal && prev.arity == 0u ) ||
         ( prev_signal && kind == SymbolKind::Predicate && arity == 0u ) )
      return;
    if ( prev.arity != arity || prev_signal != now_signal )
      throw SpecError( SpecError::Kind::Semantic,
                       "arity mismatch for symbol '" + name + "': used with " + std::to_string( prev.arity ) +
                           " and " + std::to_string( arity ) + " arguments",
                       span, name );
    if ( prev.kind != kind )
      throw SpecError( SpecError::Kind::Semantic, "symbol '" + name + "' used both as predicate and function", span,
                       name );
  }

  std::map<std::string, SymbolUse> seen_;
  std::set<std::string> read;
  std::set<std::string> written;
  SignalTable table;
};

} // namespace

SignalTable validate_signals( CoreSpec const& core )
{
  if ( !core.guarantees || conjuncts( core.guarantees ).empty() )
    throw SpecError( SpecError::Kind::Semantic, "empty specification: no guarantees" );
  SignalCollector collector;
  if ( core.assumptions )
    collector.formula( *core.assumptions );
  collector.formula( *core.guarantees );
  return collector.finish();
}

CoreSpec compile_spec( SpecAst const& ast )
{
  auto core = desugar( ast );
  core.signals = validate_signals( core );
  return core;
}

CoreSpec compile_spec( std::string_view text )
{
  return compile_spec( parse_spec( text ) );
}

} // namespace tslagent::spec
