#pragma once

// Runtime verification of agent traces: three-valued monitors per conjunct
// and the adherence experiments built on them.

#include <tslagent/runtime.hpp>

#include <string>
#include <vector>

namespace tslagent::monitor {

using ltl::Letter;
using runtime::json;

enum class Verdict { Pending, Satisfied, Violated };

std::string to_string( Verdict v );

/// Finite-prefix monitor: violated once no infinite extension satisfies the
/// formula, satisfied once none violates it.
class Ltl3Monitor
{
public:
  explicit Ltl3Monitor( ltl::Ltl const& formula );

  Verdict step( Letter letter );
  /// Step on a letter of which only the bits in `care` are known.
  Verdict step_partial( Letter letter, Letter care );
  Verdict verdict() const { return verdict_; }
  void reset();

private:
  static std::vector<int> advance( automata::Nba const& nba, std::vector<int> const& current, Letter letter,
                                   Letter care );

  automata::Nba positive_;
  automata::Nba negative_;
  std::vector<int> pos_states_;
  std::vector<int> neg_states_;
  Verdict verdict_ = Verdict::Pending;
};

enum class ConjunctKind { Guarantee, Exclusivity, PointInTime };

enum class ViolationClass
{
  Procedural,    // mentions update terms only
  Hallucination, // mentions predicates over text cells
  Arithmetic,    // mentions an integer cell
};

std::string to_string( ConjunctKind k );
std::string to_string( ViolationClass c );

struct MonitoredConjunct
{
  std::string text;
  ConjunctKind kind = ConjunctKind::Guarantee;
  ViolationClass category = ViolationClass::Hallucination;
  ltl::Ltl formula;
};

/// Guarantee conjuncts, exclusivity conjuncts and the assumption conjuncts
/// that are safety properties relating an update to a predicate.
std::vector<MonitoredConjunct> monitored_conjuncts( ltl::LtlSpec const& spec );

struct ConjunctStatus
{
  Verdict verdict = Verdict::Pending;
  long first_violation = -1; // turn index
};

class SpecMonitor
{
public:
  explicit SpecMonitor( ltl::LtlSpec const& spec );

  void observe( Letter letter );
  void observe_turn( runtime::TurnResult const& turn );
  /// Evaluator reading taken after the last turn; outputs unknown.
  void observe_inputs( Letter inputs );

  std::vector<MonitoredConjunct> const& conjuncts() const { return conjuncts_; }
  std::vector<ConjunctStatus> const& status() const { return status_; }
  long turns() const { return turns_; }
  bool violated() const;
  long first_violation() const; // -1 when none
  bool violated( ViolationClass category ) const;

  json to_json() const;

private:
  void record( std::size_t k, Verdict v );

  ltl::PropDictionary dict_;
  std::vector<MonitoredConjunct> conjuncts_;
  std::vector<Ltl3Monitor> monitors_;
  std::vector<ConjunctStatus> status_;
  long turns_ = 0;
};

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentConfig
{
  std::string task = "Task";
  std::vector<std::string> specs;      // paths, composed in order
  std::string artifact;                // optional pre-synthesized machine
  std::string agent = "automaton";     // automaton or pure-llm-mock
  int games = 75;
  int turns = 20;
  std::uint64_t seed = 1;
  double p_halluc = 0.0;               // generator fault rate per call
  double p_arith = 0.0;                // counter mis-update rate (mock only)
  int max_states = 32;
  std::string trace;                   // optional JSONL output
};

/// Relative paths are resolved against `base_dir`.
ExperimentConfig experiment_from_json( json const& j, std::string const& base_dir = "" );

struct GameRecord
{
  int game = 0;
  bool violating = false;
  long first_violation = -1;
  bool hallucination = false;
  bool arithmetic = false;
  bool procedural = false;
  std::vector<std::string> violated; // conjunct texts
};

struct AdherenceReport
{
  std::string task;
  std::string method;
  int states = 0; // 0 for agents without a machine
  int games = 0;
  int turns = 0;
  int adhering = 0;
  int hallucination_games = 0;
  int arithmetic_games = 0;
  int procedural_games = 0;
  std::vector<GameRecord> records;

  /// Percentage with one decimal, rounded half up, as text.
  static std::string percent( int part, int whole );
  std::string adherence_percent() const { return percent( adhering, games ); }
  json to_json() const;
};

/// Loads the specification and machine (synthesizing when no artifact is
/// given) and plays `games` seeded games against the scripted world.
AdherenceReport run_experiment( ExperimentConfig const& config );
AdherenceReport run_experiment( ExperimentConfig const& config, ltl::LtlSpec const& spec,
                                synth::MealyMachine const& machine );

/// Columns Task, Method, States, Adherence %.
std::string render_table( std::vector<AdherenceReport> const& reports );
/// Columns Task, Method, Hallucinations, Arithmetic errors.
std::string render_error_table( std::vector<AdherenceReport> const& reports );

/// Scripted user prompts for one game.
std::vector<std::string> user_prompts( std::uint64_t seed, int turns );

} // namespace tslagent::monitor
