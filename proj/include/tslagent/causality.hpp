#pragma once

// But-for causes over input props for effects over output props, checked
// against bounded ultimately periodic input deviations.

#include <tslagent/synthesis.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tslagent::causality {

using ltl::Letter;
using ltl::Ltl;

/// Input valuations stem · loop^ω.
struct InputTrace
{
  std::vector<Letter> stem;
  std::vector<Letter> loop;
};

struct CauseOptions
{
  int max_stem = 8;
  int max_loop = 4;
};

class CauseError : public std::runtime_error
{
public:
  enum class Kind { EffectNotOnTrace, BoundTooSmall, WrongProps, BadTrace };

  CauseError( Kind kind, std::string const& message ) : std::runtime_error( message ), kind_( kind ) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

struct CauseVerdict
{
  bool holds_on_trace = false;
  bool counterfactual_valid = false;
  std::optional<InputTrace> witness; // cause false, effect still true

  bool certified() const { return holds_on_trace && counterfactual_valid; }
};

/// Joint input/output word produced by the machine on an input lasso.
ltl::Lasso joint_word( synth::MealyMachine const& m, InputTrace const& trace );

CauseVerdict check_cause( synth::MealyMachine const& m, InputTrace const& trace, Ltl const& effect, Ltl const& cause,
                          CauseOptions const& options = {} );

struct Candidate
{
  Ltl formula;
  std::string text;
};

/// G l, F l, l U l', l W l' and X^k l (k <= 3) over input literals l != l'.
std::vector<Candidate> cause_templates( ltl::PropDictionary const& dict );

struct CauseResult
{
  std::optional<Candidate> cause;
  std::vector<Candidate> certified;
  std::string note;
};

/// Weakest certified template; `true` with a note when the effect holds on
/// every deviation; empty when nothing certifies.
CauseResult synthesize_cause( synth::MealyMachine const& m, InputTrace const& trace, Ltl const& effect,
                              CauseOptions const& options = {} );

/// Formula text over the dictionary's terms.
std::string formula_text( Ltl const& f, ltl::PropDictionary const& dict );

} // namespace tslagent::causality
