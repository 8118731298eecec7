#pragma once

// Bounded synthesis of Mealy machines from LtlSpec instances and an
// independent product-based verifier.

#include <tslagent/automata.hpp>
#include <tslagent/ltl.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tslagent::synth {

using ltl::Letter;

struct Transition
{
  Letter outputs = 0; // output prop bits at their dictionary positions
  int next = 0;

  bool operator==( Transition const& ) const = default;
};

/// Deterministic transducer over the dictionary's props. Input valuations
/// are indexed by the input-prop bits (bit i = prop i, i < num_inputs);
/// state 0 is initial.
struct MealyMachine
{
  ltl::PropDictionary dict;
  spec::SignalTable signals;
  std::vector<std::vector<Transition>> states;

  int num_states() const { return static_cast<int>( states.size() ); }
  std::size_t num_valuations() const { return std::size_t{ 1 } << dict.num_inputs; }
  Transition const& step( int state, Letter inputs ) const
  {
    return states.at( static_cast<std::size_t>( state ) ).at( static_cast<std::size_t>( inputs ) );
  }

  /// Output letter per input of `inputs`, starting in state 0.
  std::vector<Letter> run( std::vector<Letter> const& inputs ) const;

  /// Structural check: total, deterministic, next states in range, one
  /// alternative per output group. Throws std::invalid_argument.
  void validate() const;

  bool operator==( MealyMachine const& ) const = default;
};

/// Smallest equivalent machine (partition refinement), states renumbered in
/// breadth-first order from state 0 over ascending input valuations.
MealyMachine minimize( MealyMachine const& m );

struct SynthesisOptions
{
  int max_states = 32;
  int max_bound = 3;                   // counting-function bound tried 0..max_bound
  std::size_t search_budget = 2000000; // backtracking nodes per state count
  std::size_t max_positions = 400000;  // safety-game positions
};

struct SynthesisResult
{
  enum class Status { Realizable, Unrealizable };

  Status status = Status::Unrealizable;
  std::optional<MealyMachine> machine;
  int states = 0;             // states of the returned machine
  int bound = -1;             // counting bound that admitted a strategy
  bool minimal = false;       // every smaller state count was refuted
  bool definitive = false;    // unrealizability is proven, not bound-exhausted
  int max_states_tried = 0;
  int ucw_states = 0;
  std::string detail;

  bool realizable() const { return status == Status::Realizable; }
};

SynthesisResult synthesize( ltl::LtlSpec const& spec, SynthesisOptions const& options = {} );

/// Universal co-Büchi automaton of the negated specification, as the union
/// of one NBA per guarantee conjunct (and per exclusivity conjunct when
/// `with_exclusivity`).
automata::Nba build_ucw( ltl::LtlSpec const& spec, bool with_exclusivity );

class ProductTooLarge : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct Counterexample
{
  std::vector<Letter> stem; // input valuations
  std::vector<Letter> loop;
  ltl::Lasso word;          // joint input/output letters
};

struct VerificationReport
{
  bool passed = false;
  std::size_t product_states = 0;
  std::size_t automaton_states = 0;
  std::optional<Counterexample> counterexample;
};

/// Exhaustive emptiness check of machine × NBA(¬formula).
VerificationReport verify_machine( MealyMachine const& m, ltl::Ltl const& formula,
                                   std::size_t max_product_states = 1000000 );
VerificationReport verify_machine( MealyMachine const& m, ltl::LtlSpec const& spec,
                                   std::size_t max_product_states = 1000000 );

} // namespace tslagent::synth
