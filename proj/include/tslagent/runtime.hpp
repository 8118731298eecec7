#pragma once

// The generative agent: a synthesized machine plus an implementation of
// every predicate and function symbol, driven one turn at a time.

#include <tslagent/synthesis.hpp>

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace tslagent::runtime {

using nlohmann::json;

/// Cell and output values: text (summary, passages) or integers (counters).
using Value = std::variant<std::string, std::int64_t>;

std::string text_of( Value const& v );
json to_json( Value const& v );
Value value_from_json( json const& j );

/// Transcript of one oracle interaction.
struct OracleCall
{
  std::string kind;   // predicate, function, summarizer
  std::string symbol;
  std::string backend; // llm, builtin, scripted
  json request;
  std::string response;

  json to_json() const;
};

class OracleError : public std::runtime_error
{
public:
  OracleError( std::string const& message, std::vector<OracleCall> transcript = {} )
      : std::runtime_error( message ), transcript_( std::move( transcript ) )
  {
  }
  std::vector<OracleCall> const& transcript() const { return transcript_; }

private:
  std::vector<OracleCall> transcript_;
};

class BindingError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

struct CallContext
{
  std::uint64_t seed = 0;
  std::int64_t turn = 0;
  int call_index = 0; // position of the call within the turn
  std::string user_prompt;
};

/// Deterministic stand-in for LLM calls, used in tests and experiments.
class ScriptedOracle
{
public:
  virtual ~ScriptedOracle() = default;
  virtual bool predicate( std::string const& symbol, std::vector<Value> const& args, CallContext const& ctx ) = 0;
  virtual Value generate( std::string const& symbol, std::vector<Value> const& args, CallContext const& ctx ) = 0;
  virtual std::string summarize( std::string const& summary, std::string const& passage, CallContext const& ctx ) = 0;
};

/// Chat-completions transport. `complete` receives the full request body
/// and returns the assistant message text.
class ChatBackend
{
public:
  virtual ~ChatBackend() = default;
  virtual std::string complete( json const& request ) = 0;
};

struct LlmSettings
{
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4";
  std::string api_key_env = "OPENAI_API_KEY";
  std::int64_t seed = 0;
  std::string journal;        // JSONL path, empty for none
  std::string mode = "live";  // live, record, replay
  int timeout_seconds = 60;
};

LlmSettings llm_settings_from_json( json const& j );

/// Append-only request-hash -> response store, JSONL on disk.
class Journal
{
public:
  explicit Journal( std::string path );

  static std::string request_hash( json const& request );

  std::optional<std::string> find( json const& request ) const;
  void append( json const& request, std::string const& response );
  std::size_t size() const;

private:
  std::string path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
};

/// OpenAI-compatible chat completions over HTTP with optional record/replay.
class ChatClient : public ChatBackend
{
public:
  explicit ChatClient( LlmSettings settings );
  std::string complete( json const& request ) override;
  LlmSettings const& settings() const { return settings_; }

private:
  std::string post( json const& request );

  LlmSettings settings_;
  std::unique_ptr<Journal> journal_;
};

// ---------------------------------------------------------------------------
// Bindings
// ---------------------------------------------------------------------------

struct Binding
{
  enum class Kind { Llm, Builtin, Scripted };

  Kind kind = Kind::Scripted;
  std::string prompt;  // template for llm bindings
  std::string builtin; // builtin name
  json params = json::object();
};

struct BindingConfig
{
  std::map<std::string, Binding> predicates;
  std::map<std::string, Binding> functions;
  std::optional<Binding> summarizer;
  std::string summary_cell;                  // cell refreshed by the summarizer
  std::map<std::string, Value> initial_cells; // overrides of the defaults
  std::optional<LlmSettings> llm;
  json scripted = json::object(); // parameters for the scripted world
};

BindingConfig binding_config_from_json( json const& j );

/// Validated implementation of every symbol of a signal table.
class TermRegistry
{
public:
  std::map<std::string, Binding> predicates;
  std::map<std::string, Binding> functions;
  std::optional<Binding> summarizer;
  std::string summary_cell;
  std::map<std::string, Value> initial_cells;
  spec::SignalTable signals;
  std::shared_ptr<ScriptedOracle> scripted;
  std::shared_ptr<ChatBackend> llm;
  std::string llm_model = "gpt-4";
  std::int64_t llm_seed = 0;

  std::size_t count( Binding::Kind kind ) const;
};

/// Checks that every symbol is bound exactly once, that no unknown symbol
/// is bound and that llm templates carry their placeholders.
TermRegistry bind_terms( spec::SignalTable const& table, BindingConfig const& config,
                         std::shared_ptr<ScriptedOracle> scripted = nullptr, std::shared_ptr<ChatBackend> llm = nullptr );

/// Bindings for the adventure domain backed entirely by a scripted oracle,
/// with builtin `add` and `safeThreshold` (safeCount >= 3) where present.
BindingConfig scripted_binding_config( spec::SignalTable const& table );

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

struct TurnResult
{
  std::int64_t turn = 0;
  int state = 0;
  int next_state = 0;
  std::string user_prompt;
  ltl::Letter inputs = 0;
  ltl::Letter outputs = 0;
  std::map<std::string, bool> valuation;      // predicate term -> value
  std::map<std::string, std::string> updates; // signal -> chosen update term
  std::map<std::string, Value> generated;     // signal -> value assigned this turn
  std::map<std::string, Value> cells;         // cell store after the turn
  std::vector<OracleCall> calls;

  json to_json() const;
  std::string jsonl() const; // canonical one-line form
};

class Session
{
public:
  Session( synth::MealyMachine machine, TermRegistry registry, std::uint64_t seed,
           std::map<std::string, Value> const& initial_cells = {} );

  /// Runs one turn; on error the session is left unchanged.
  TurnResult step_turn( std::string const& user_prompt );

  /// Rewrites the update choice of the machine before it is applied. Used
  /// to model agents that do not follow the strategy faithfully.
  using OutputHook = std::function<ltl::Letter( ltl::Letter inputs, ltl::Letter outputs, CallContext const& ctx )>;
  void set_output_hook( OutputHook hook ) { hook_ = std::move( hook ); }

  /// Predicate valuation of the current cells without advancing the turn.
  ltl::Letter evaluate_inputs( std::string const& user_prompt ) const;

  int state() const { return state_; }
  std::int64_t turn() const { return turn_; }
  std::uint64_t seed() const { return seed_; }
  std::map<std::string, Value> const& cells() const { return cells_; }
  std::vector<TurnResult> const& trace() const { return trace_; }
  synth::MealyMachine const& machine() const { return machine_; }
  TermRegistry const& registry() const { return registry_; }

  json to_json() const;

private:
  synth::MealyMachine machine_;
  TermRegistry registry_;
  std::uint64_t seed_;
  int state_ = 0;
  std::int64_t turn_ = 0;
  std::map<std::string, Value> cells_;
  std::vector<TurnResult> trace_;
  OutputHook hook_;
};

Session start_session( synth::MealyMachine const& machine, TermRegistry const& registry, std::uint64_t seed,
                       std::map<std::string, Value> const& initial_cells = {} );

/// Checks that the update terms of a trace form a run of the machine.
bool replays_on_machine( synth::MealyMachine const& m, std::vector<TurnResult> const& trace );

} // namespace tslagent::runtime
