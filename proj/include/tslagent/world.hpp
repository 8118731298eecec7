#pragma once

// Scripted adventure world: a deterministic oracle for location predicates,
// passage generators and the summarizer, with injectable generator faults.

#include <tslagent/runtime.hpp>

#include <random>

namespace tslagent::world {

using runtime::CallContext;
using runtime::Value;

enum class FaultStyle
{
  RandomOther, // a faulty passage lands in some other location
  Detectable,  // a faulty passage lands in the fault location, or leaves it
};

struct WorldOptions
{
  double p_halluc = 0.0;
  FaultStyle style = FaultStyle::RandomOther;
  std::string fault_location = "cave";
  std::vector<std::string> locations; // empty: derived from toX symbols
};

WorldOptions world_options_from_json( runtime::json const& j );

/// `toMarket` -> `market`, empty when the symbol is not a location generator.
std::string location_of_generator( std::string const& symbol );
/// `inMarket` -> `market`, empty when the symbol is not a location predicate.
std::string location_of_predicate( std::string const& symbol );
/// Last `[location=...]` tag of a text, empty if none.
std::string location_tag( std::string const& text );
/// Keyword reading of a user choice: mentions safe and neither unsafe nor risky.
bool is_safe_choice( std::string const& user_prompt );

/// Randomness that depends only on the call coordinates.
std::mt19937_64 call_rng( CallContext const& ctx, std::string const& symbol );

class AdventureWorld : public runtime::ScriptedOracle
{
public:
  AdventureWorld( spec::SignalTable const& table, WorldOptions options );

  bool predicate( std::string const& symbol, std::vector<Value> const& args, CallContext const& ctx ) override;
  Value generate( std::string const& symbol, std::vector<Value> const& args, CallContext const& ctx ) override;
  std::string summarize( std::string const& summary, std::string const& passage, CallContext const& ctx ) override;

  /// Where a passage asked for `requested` ends up given a fault draw.
  std::string faulty_location( std::string const& requested, std::mt19937_64& rng ) const;

  std::vector<std::string> const& locations() const { return locations_; }
  WorldOptions const& options() const { return options_; }

  static std::string passage( std::string const& location, std::string const& user_prompt );

private:
  WorldOptions options_;
  std::vector<std::string> locations_;
};

} // namespace tslagent::world
