#pragma once

// Frontend for the TSL specification dialect: lexing, parsing, desugaring
// into core assume/guarantee form, and signal classification.

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tslagent::spec {

struct SourceSpan
{
  int line = 0;
  int column = 0;
};

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

struct FunctionTerm;
using FunctionTermPtr = std::shared_ptr<const FunctionTerm>;

/// A function term is either a reference to a signal (`s`) or the
/// application of a function symbol (`toCave(s)`, `f()`, or a numeral).
struct FunctionTerm
{
  enum class Kind { Signal, Application };

  Kind kind = Kind::Signal;
  std::string name;
  std::vector<FunctionTermPtr> args;
  SourceSpan span;

  static FunctionTermPtr signal( std::string name, SourceSpan span = {} );
  static FunctionTermPtr apply( std::string name, std::vector<FunctionTermPtr> args, SourceSpan span = {} );

  bool is_literal() const; // numeral application such as `1`
};

bool same_structure( FunctionTerm const& a, FunctionTerm const& b );
std::string to_string( FunctionTerm const& t );

// ---------------------------------------------------------------------------
// Formulas
// ---------------------------------------------------------------------------

enum class Op
{
  True,
  False,
  Predicate, // name(args...)
  Update,    // [name <- value]
  Not,
  And,
  Or,
  Implies,
  Iff,
  Next,
  Globally,
  Finally,
  Until,
  WeakUntil,
  Release,
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula
{
  Op op = Op::True;
  std::string name;                   // predicate symbol or update target
  std::vector<FunctionTermPtr> args;  // predicate arguments
  FunctionTermPtr value;              // update value
  FormulaPtr lhs;
  FormulaPtr rhs;
  SourceSpan span;

  static FormulaPtr constant( bool value, SourceSpan span = {} );
  static FormulaPtr predicate( std::string name, std::vector<FunctionTermPtr> args, SourceSpan span = {} );
  static FormulaPtr update( std::string target, FunctionTermPtr value, SourceSpan span = {} );
  static FormulaPtr unary( Op op, FormulaPtr child, SourceSpan span = {} );
  static FormulaPtr binary( Op op, FormulaPtr lhs, FormulaPtr rhs, SourceSpan span = {} );

  bool is_atom() const { return op == Op::Predicate || op == Op::Update; }
  bool is_unary() const;
  bool is_binary() const;
};

bool same_structure( Formula const& a, Formula const& b );

/// Prints a formula in the concrete dialect. Every binary subformula is
/// parenthesized so that the output re-parses to the same tree.
std::string to_string( Formula const& f );

/// Visits every atom (predicate or update term) in `f`.
template<typename Fn>
void for_each_atom( Formula const& f, Fn&& fn )
{
  if ( f.is_atom() )
  {
    fn( f );
    return;
  }
  if ( f.lhs )
    for_each_atom( *f.lhs, fn );
  if ( f.rhs )
    for_each_atom( *f.rhs, fn );
}

std::size_t count_nodes( Formula const& f, Op op );

/// Splits nested conjunctions into their top-level conjuncts.
std::vector<FormulaPtr> conjuncts( FormulaPtr const& f );

// ---------------------------------------------------------------------------
// Specification AST
// ---------------------------------------------------------------------------

enum class SectionKind
{
  InitiallyAssume,
  AlwaysAssume,
  InitiallyGuarantee,
  Guarantee,
  AlwaysGuarantee,
};

std::string_view keyword( SectionKind kind );
bool is_assumption( SectionKind kind );
bool is_always( SectionKind kind );

struct Section
{
  SectionKind kind = SectionKind::Guarantee;
  std::vector<FormulaPtr> formulas;
  SourceSpan span;
};

struct SpecAst
{
  std::vector<Section> sections;

  std::size_t count( SectionKind kind ) const; // formulas across sections of that kind
};

bool same_structure( SpecAst const& a, SpecAst const& b );
std::string to_string( SpecAst const& ast );

/// Conjunction of specifications: sections are concatenated.
SpecAst compose( std::vector<SpecAst> const& parts );

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class SpecError : public std::runtime_error
{
public:
  enum class Kind { Lexical, Syntax, UnbalancedBlock, Semantic };

  SpecError( Kind kind, std::string message, SourceSpan span = {}, std::string token = {} );

  Kind kind() const { return kind_; }
  SourceSpan span() const { return span_; }
  std::string const& token() const { return token_; }
  std::string const& message() const { return message_; }

  /// `line:column: message` followed by the source line and a caret.
  std::string diagnostic( std::string_view source, std::string_view filename = {} ) const;

private:
  Kind kind_;
  std::string message_;
  SourceSpan span_;
  std::string token_;
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

SpecAst parse_spec( std::string_view text );

/// Parses a single formula (no block structure, optional trailing `;`).
FormulaPtr parse_formula( std::string_view text );

/// Parses a single function term such as `add(safeCount, 1)`.
FunctionTermPtr parse_function_term( std::string_view text );

// ---------------------------------------------------------------------------
// Core form
// ---------------------------------------------------------------------------

struct Symbol
{
  std::string name;
  std::size_t arity = 0;
};

struct SignalTable
{
  std::set<std::string> inputs;  // zero-arity predicates read as boolean inputs
  std::set<std::string> cells;   // read back by the system
  std::set<std::string> outputs; // written, never read
  std::set<std::string> written_cells; // cells that are update targets
  std::map<std::string, std::size_t> predicates;
  std::map<std::string, std::size_t> functions; // numerals excluded

  bool operator==( SignalTable const& ) const = default;
};

/// Assume/guarantee pair using only !, &&, ||, X, U, R and constants.
struct CoreSpec
{
  FormulaPtr assumptions;
  FormulaPtr guarantees;
  SignalTable signals;
};

FormulaPtr desugar( FormulaPtr const& f );
CoreSpec desugar( SpecAst const& ast );

/// Classifies signals and checks arities. Throws SpecError (Semantic).
SignalTable validate_signals( CoreSpec const& core );

/// parse_spec, desugar and validate_signals in one go; the result carries
/// its signal table.
CoreSpec compile_spec( std::string_view text );
CoreSpec compile_spec( SpecAst const& ast );

bool is_core( Formula const& f );

} // namespace tslagent::spec
