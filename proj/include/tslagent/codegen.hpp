#pragma once

// Automaton artifacts: canonical JSON serialization, nested-conditional
// pseudocode and the node/edge graph served to clients.

#include <tslagent/synthesis.hpp>

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace tslagent::codegen {

inline constexpr char const* artifact_format = "tslagent-automaton";
inline constexpr int artifact_version = 1;

class ArtifactError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// One guarded transition: inputs matching every literal of `guard` (prop
/// ids with polarity) take `outputs` and move to `next`.
struct GuardedTransition
{
  std::vector<std::pair<int, bool>> guard;
  ltl::Letter outputs = 0;
  int next = 0;
};

/// Disjoint, exhaustive guards per state, obtained by splitting on input
/// props in dictionary order (negative branch first) until all valuations of
/// a cube agree.
std::vector<GuardedTransition> guarded_transitions( synth::MealyMachine const& m, int state );

nlohmann::json emit_json( synth::MealyMachine const& m );
std::string emit_json_text( synth::MealyMachine const& m );

/// Inverse of emit_json; checks guards are exclusive and exhaustive and
/// that every referenced prop exists. Throws ArtifactError.
synth::MealyMachine parse_artifact( nlohmann::json const& doc );
synth::MealyMachine parse_artifact_text( std::string const& text );

enum class Style { Neutral, JavaScript };

std::string emit_pseudocode( synth::MealyMachine const& m, Style style = Style::Neutral );

/// Nodes are states; edges carry guard text and the chosen update terms.
nlohmann::json graph( synth::MealyMachine const& m );

/// `[storyPassage <- toMarket(s)]` -> `toMarket(s)`.
std::string update_value( ltl::PropInfo const& prop );

/// Guard as TSL text, `true` when empty.
std::string guard_text( synth::MealyMachine const& m, std::vector<std::pair<int, bool>> const& guard,
                        Style style = Style::Neutral );

} // namespace tslagent::codegen
