#pragma once

// Nondeterministic Büchi automata over valuations of indexed propositions,
// built from NNF formulas with a tableau construction.

#include <tslagent/ltl.hpp>

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tslagent::automata {

using ltl::Letter;

/// Conjunction of literals: bits in `pos` must be set, bits in `neg` clear.
struct Cube
{
  Letter pos = 0;
  Letter neg = 0;

  bool matches( Letter letter ) const { return ( letter & pos ) == pos && ( letter & neg ) == 0u; }

  /// Match when only the bits in `care` are known; the rest may be chosen.
  bool matches( Letter letter, Letter care ) const
  {
    return ( pos & care & ~letter ) == 0u && ( neg & care & letter ) == 0u;
  }

  /// True when every letter matching `other` also matches this cube.
  bool weaker_than( Cube const& other ) const
  {
    return ( pos & ~other.pos ) == 0u && ( neg & ~other.neg ) == 0u;
  }

  bool operator==( Cube const& ) const = default;
  auto operator<=>( Cube const& ) const = default;
};

struct Edge
{
  Cube label;
  int target = 0;

  bool operator==( Edge const& ) const = default;
  auto operator<=>( Edge const& ) const = default;
};

/// State-based Büchi automaton. A run starts in an initial state and moves
/// along one edge per letter; it accepts when it visits accepting states
/// infinitely often.
struct Nba
{
  std::vector<std::vector<Edge>> out;
  std::vector<char> accepting;
  std::vector<int> initial;

  int num_states() const { return static_cast<int>( out.size() ); }
  std::size_t num_edges() const;
  bool empty() const { return initial.empty(); }

  bool accepts( ltl::Lasso const& word ) const;
};

class FormulaTooLarge : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct NbaOptions
{
  std::size_t max_formula_nodes = 2000;
  std::size_t max_states = 200000;
  bool simplify = true; // prune useless states and merge bisimilar ones
};

/// Tableau construction producing a generalized automaton with one
/// acceptance set per until-subformula, followed by degeneralization.
Nba ltl_to_nba( ltl::Ltl const& nnf_formula, NbaOptions const& options = {} );

/// Removes states from which no accepting cycle is reachable.
Nba prune( Nba const& nba );

/// Quotient by bisimulation (same acceptance, matching labelled edges).
Nba merge_bisimilar( Nba const& nba );

/// Disjoint union; initial states of both operands stay initial.
Nba disjoint_union( Nba const& a, Nba const& b );

/// Language emptiness of the formula itself (after NNF conversion).
bool satisfiable( ltl::Ltl const& formula );

/// `a` implies `b` on every word, decided by emptiness of a && !b.
bool implies( ltl::Ltl const& a, ltl::Ltl const& b );

} // namespace tslagent::automata
