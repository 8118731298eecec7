#pragma once

// Session service behind the HTTP API used by interactive clients.

#include <tslagent/monitor.hpp>
#include <tslagent/runtime.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace tslagent::serve {

using runtime::json;

struct ServiceError : std::runtime_error
{
  ServiceError( int status, std::string const& message ) : std::runtime_error( message ), status( status ) {}
  int status;
};

struct Artifact
{
  synth::MealyMachine machine;
  runtime::TermRegistry registry;
  std::optional<ltl::LtlSpec> spec; // enables per-conjunct verdicts
};

class Service
{
public:
  explicit Service( std::string persist_dir = "" );

  void add_artifact( std::string const& id, Artifact artifact );

  /// Returns the new session id.
  std::string create_session( std::string const& artifact_id, std::uint64_t seed );
  json play_turn( std::string const& session_id, std::string const& user_prompt );
  json session( std::string const& session_id ) const;
  json artifact_graph( std::string const& artifact_id ) const;

  /// Routes of the HTTP API.
  void mount( httplib::Server& server );

private:
  struct Entry
  {
    std::mutex mutex; // serializes turns of one session
    std::string artifact;
    runtime::Session session;
    std::optional<monitor::SpecMonitor> monitor;
  };

  std::shared_ptr<Entry> find( std::string const& session_id ) const;
  json describe( std::string const& id, Entry const& e ) const;

  std::string persist_dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Artifact const>> artifacts_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  int next_id_ = 1;
};

} // namespace tslagent::serve
