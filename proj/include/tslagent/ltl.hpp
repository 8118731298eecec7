#pragma once

// Propositional LTL over indexed atoms, the TSL-to-LTL abstraction and
// lasso evaluation.

#include <tslagent/spec.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tslagent::ltl {

/// A valuation of all propositions; bit i is proposition i.
using Letter = std::uint64_t;
inline constexpr int max_props = 64;

enum class Op : std::uint8_t { True, False, Atom, Not, And, Or, Next, Until, Release };

/// Immutable, structurally compared LTL formula. Constructors fold boolean
/// constants but otherwise keep the tree as written.
class Ltl
{
public:
  Ltl();

  static Ltl constant( bool value );
  static Ltl atom( int prop );

  friend Ltl operator!( Ltl const& f );
  friend Ltl operator&&( Ltl const& a, Ltl const& b );
  friend Ltl operator||( Ltl const& a, Ltl const& b );
  static Ltl next( Ltl const& f );
  static Ltl until( Ltl const& a, Ltl const& b );
  static Ltl release( Ltl const& a, Ltl const& b );

  // derived operators, expanded into the core ones
  static Ltl globally( Ltl const& f ) { return release( constant( false ), f ); }
  static Ltl finally( Ltl const& f ) { return until( constant( true ), f ); }
  static Ltl weak_until( Ltl const& a, Ltl const& b ) { return until( a, b ) || globally( a ); }
  static Ltl implies( Ltl const& a, Ltl const& b ) { return !a || b; }
  static Ltl iff( Ltl const& a, Ltl const& b ) { return implies( a, b ) && implies( b, a ); }

  Op op() const;
  int prop() const; // valid for Op::Atom
  Ltl lhs() const;
  Ltl rhs() const;
  std::size_t size() const; // node count
  std::size_t hash() const;
  std::uint64_t props() const; // mask of atoms that occur
  bool is_constant( bool value ) const { return op() == ( value ? Op::True : Op::False ); }

  bool operator==( Ltl const& other ) const;
  bool operator!=( Ltl const& other ) const { return !( *this == other ); }

  /// Identity of the underlying node, stable while the formula is alive.
  void const* id() const { return node_.get(); }

  std::string to_string( std::function<std::string( int )> const& name ) const;
  std::string to_string() const; // atoms printed as p0, p1, ...

private:
  struct Node;
  explicit Ltl( std::shared_ptr<Node const> node );
  static Ltl make( Op op, int prop, Ltl const* lhs, Ltl const* rhs );

  std::shared_ptr<Node const> node_;
};

struct LtlHash
{
  std::size_t operator()( Ltl const& f ) const { return f.hash(); }
};

/// Negation normal form: negations only directly above atoms.
Ltl to_nnf( Ltl const& f );
bool is_nnf( Ltl const& f );

/// Ultimately periodic word stem · loop^ω. The loop must be non-empty.
struct Lasso
{
  std::vector<Letter> stem;
  std::vector<Letter> loop;

  std::size_t length() const { return stem.size() + loop.size(); }
  Letter at( std::size_t position ) const; // any position, unrolling the loop
};

/// Truth value of `f` at every position of the folded lasso.
std::vector<bool> evaluate_positions( Ltl const& f, Lasso const& word );
bool evaluate( Ltl const& f, Lasso const& word );

// ---------------------------------------------------------------------------
// Abstraction of a TSL core specification
// ---------------------------------------------------------------------------

struct PropInfo
{
  std::string name;   // e.g. p_inCave_s, u_storyPassage_toCave_s
  std::string term;   // TSL text, e.g. inCave(s), [storyPassage <- toCave(s)]
  bool input = true;
  std::string signal; // update target, outputs only
};

struct OutputGroup
{
  std::string signal;
  std::vector<int> alternatives; // prop ids, sorted by prop name
};

/// Bidirectional prop <-> term dictionary. Input props come first
/// (ids 0..num_inputs-1), then output props; both blocks sorted by name.
struct PropDictionary
{
  std::vector<PropInfo> props;
  int num_inputs = 0;
  std::vector<OutputGroup> groups; // sorted by signal name

  int size() const { return static_cast<int>( props.size() ); }
  int num_outputs() const { return size() - num_inputs; }
  int find_name( std::string const& name ) const;
  int find_term( std::string const& term ) const;
  std::string name( int prop ) const { return props.at( static_cast<std::size_t>( prop ) ).name; }
  Letter input_mask() const;
  Letter output_mask() const;

  bool operator==( PropDictionary const& other ) const;
};

struct Conjunct
{
  Ltl formula;
  std::string text; // TSL source form
};

struct LtlSpec
{
  PropDictionary dict;
  spec::SignalTable signals;
  std::vector<Conjunct> assumptions;
  std::vector<Conjunct> guarantees;
  std::vector<Conjunct> exclusivity; // one per output signal
  Ltl formula;                       // (A -> G) && exclusivity
};

LtlSpec abstract_to_ltl( spec::CoreSpec const& core );

/// Maps a TSL formula onto the dictionary's props (after desugaring).
/// Throws std::invalid_argument for atoms that are not in the dictionary.
Ltl abstract_formula( spec::FormulaPtr const& f, PropDictionary const& dict );

std::string prop_name_for( std::string const& prefix, std::string const& text );

} // namespace tslagent::ltl
