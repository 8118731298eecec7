#include "support.hpp"

#include <tslagent/cli.hpp>
#include <tslagent/codegen.hpp>
#include <tslagent/serve.hpp>
#include <tslagent/world.hpp>

#include <doctest.h>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

using namespace tslagent;
using runtime::json;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run( std::vector<std::string> const& args, std::string const& input = "" )
{
  std::istringstream in( input );
  std::ostringstream out;
  std::ostringstream err;
  Outcome o;
  o.code = cli::run( args, in, out, err );
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string src( std::string const& relative )
{
  return testing_support::source_path( relative );
}

fs::path scratch()
{
  auto dir = fs::temp_directory_path() / ( "tslagent_cli_" + std::to_string( ::getpid() ) );
  fs::create_directories( dir );
  return dir;
}

std::string slurp( fs::path const& p )
{
  std::ifstream in( p );
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

std::string const& task1_artifact()
{
  static std::string const path = [] {
    auto p = ( scratch() / "adventure.automaton.json" ).string();
    auto o = run( { "synth", src( "specs/adventure.tsl" ), "-o", p } );
    REQUIRE( o.code == 0 );
    return p;
  }();
  return path;
}

} // namespace

TEST_CASE( "synth writes a verified artifact" )
{
  auto path = scratch() / "synth_out.json";
  auto o = run( { "synth", src( "specs/adventure.tsl" ), "-o", path.string() } );
  CHECK( o.code == cli::Ok );
  CHECK( o.err.find( "realizable with 2 states" ) != std::string::npos );
  auto m = codegen::parse_artifact_text( slurp( path ) );
  CHECK( m.num_states() == 2 );

  auto again = run( { "synth", src( "specs/adventure.tsl" ) } );
  CHECK( again.out == slurp( path ) );
}

TEST_CASE( "exit codes per failure class" )
{
  auto contradiction = run( { "synth", src( "specs/contradiction.tsl" ) } );
  CHECK( contradiction.code == cli::Unrealizable );
  CHECK( contradiction.err.find( "definitive" ) != std::string::npos );

  auto parse = run( { "synth", src( "specs/choices_original.tsl" ) } );
  CHECK( parse.code == cli::ParseError );
  CHECK( parse.err.find( "choices_original.tsl:16" ) != std::string::npos );

  CHECK( run( { "synth", src( "specs/missing.tsl" ) } ).code == cli::IoFailure );
  CHECK( run( { "verify", task1_artifact(), src( "specs/choices.tsl" ) } ).code == cli::VerificationFailed );
  CHECK( run( { "verify", task1_artifact(), src( "specs/adventure.tsl" ) } ).code == cli::Ok );
  CHECK( run( {} ).code == cli::ParseError );
  CHECK( run( { "synth" } ).code == cli::ParseError );
  CHECK( run( { "--help" } ).code == 0 );

  auto bad = scratch() / "bad.json";
  std::ofstream( bad ) << "{ not json";
  CHECK( run( { "codegen", bad.string() } ).code == cli::ParseError );
  CHECK( run( { "eval", bad.string() } ).code == cli::ParseError );

  // replay without a recorded answer is an oracle failure
  auto journal = scratch() / "empty.journal.jsonl";
  std::ofstream( journal ).close();
  auto bindings = json::parse( testing_support::read_text( "configs/bindings/llm_task1.json" ) );
  bindings["llm"]["mode"] = "replay";
  bindings["llm"]["journal"] = journal.string();
  auto bindings_path = scratch() / "replay_bindings.json";
  std::ofstream( bindings_path ) << bindings.dump();
  auto oracle = run( { "play", task1_artifact(), bindings_path.string() }, "go\n" );
  CHECK( oracle.code == cli::OracleFailure );
  CHECK( oracle.err.find( "no journal entry" ) != std::string::npos );
}

TEST_CASE( "codegen prints the market branch" )
{
  auto o = run( { "codegen", task1_artifact(), "--js" } );
  REQUIRE( o.code == 0 );
  CHECK( o.out.find( "if (currentState === 0) {" ) == 0u );
  CHECK( o.out.find( "storyPassage = toMarket(s)" ) != std::string::npos );
  auto g = run( { "codegen", task1_artifact(), "--graph" } );
  CHECK( json::parse( g.out ).at( "nodes" ).size() == 2u );
}

TEST_CASE( "eval reports the table columns" )
{
  auto report = scratch() / "report.json";
  auto o = run( { "eval", src( "configs/task1_mock.json" ), "-o", report.string() } );
  REQUIRE( o.code == 0 );
  CHECK( o.out.find( "Task   | Method        | States | Adherence %" ) == 0u );
  auto j = json::parse( slurp( report ) );
  for ( auto key : { "task", "method", "states", "adherence_percent" } )
    CHECK( j.contains( key ) );
  CHECK( j["games"] == 75 );

  auto second = scratch() / "report2.json";
  CHECK( run( { "eval", src( "configs/task1_mock.json" ), "-o", second.string() } ).out == o.out );
  CHECK( slurp( second ) == slurp( report ) );
}

TEST_CASE( "play and explain" )
{
  auto trace = scratch() / "play.jsonl";
  auto o = run( { "play", task1_artifact(), src( "configs/bindings/scripted.json" ), "--seed", "3", "--trace",
                  trace.string() },
                "first\nsecond\n" );
  REQUIRE( o.code == 0 );
  CHECK( o.out.find( "[location=market]" ) != std::string::npos );
  std::istringstream lines( slurp( trace ) );
  std::string line;
  int turns = 0;
  while ( std::getline( lines, line ) )
    CHECK( json::parse( line )["turn"] == turns++ );
  CHECK( turns == 2 );

  auto automaton = scratch() / "cause.json";
  auto e = run( { "explain", task1_artifact(), trace.string(), "--effect", "G ! [storyPassage <- toCave(s)]",
                  "--automaton", automaton.string() } );
  REQUIRE( e.code == 0 );
  CHECK( e.out.find( "cause: " ) != std::string::npos );
  auto nba = json::parse( slurp( automaton ) );
  CHECK( nba["format"] == "tslagent-cause-automaton" );
  CHECK_FALSE( nba["states"].empty() );

  auto wrong = run( { "explain", task1_artifact(), trace.string(), "--effect", "F [storyPassage <- toCave(s)]" } );
  CHECK( wrong.code == cli::Failure );
  CHECK( wrong.err.find( "does not hold" ) != std::string::npos );
  CHECK( run( { "explain", task1_artifact(), trace.string(), "--effect", "G [nowhere <- f()]" } ).code ==
         cli::ParseError );
}

namespace {

/// Scripted world that fails every call made for the prompt "boom".
class FlakyWorld : public world::AdventureWorld
{
public:
  using AdventureWorld::AdventureWorld;

  bool predicate( std::string const& symbol, std::vector<runtime::Value> const& args,
                  runtime::CallContext const& ctx ) override
  {
    if ( ctx.user_prompt == "boom" )
      throw runtime::OracleError( "oracle unavailable" );
    return AdventureWorld::predicate( symbol, args, ctx );
  }
};

struct Server
{
  httplib::Server http;
  std::thread thread;
  int port = 0;

  explicit Server( serve::Service& service )
  {
    service.mount( http );
    port = http.bind_to_any_port( "127.0.0.1" );
    thread = std::thread( [this] { http.listen_after_bind(); } );
    http.wait_until_ready();
  }
  ~Server()
  {
    http.stop();
    thread.join();
  }
};

} // namespace

TEST_CASE( "serve API" )
{
  auto machine = codegen::parse_artifact_text( slurp( task1_artifact() ) );
  auto spec = ltl::abstract_to_ltl( spec::compile_spec( testing_support::load_spec( "adventure.tsl" ) ) );
  auto world = std::make_shared<FlakyWorld>( machine.signals, world::WorldOptions{} );
  auto registry =
      runtime::bind_terms( machine.signals, runtime::scripted_binding_config( machine.signals ), world );
  auto persist = scratch() / "sessions";
  fs::remove_all( persist );
  serve::Service service( persist.string() );
  service.add_artifact( "adventure", { machine, registry, spec } );
  Server server( service );
  httplib::Client client( "127.0.0.1", server.port );

  auto created = client.Post( "/sessions", R"({"artifact_id":"adventure","seed":5})", "application/json" );
  REQUIRE( created );
  REQUIRE( created->status == 201 );
  auto id = json::parse( created->body )["session_id"].get<std::string>();

  auto turn = client.Post( "/sessions/" + id + "/turns", R"({"user_prompt":"I take the safe path."})",
                           "application/json" );
  REQUIRE( turn );
  CHECK( turn->status == 200 );
  auto t = json::parse( turn->body );
  CHECK( t["turn"] == 0 );
  CHECK( t["updates"]["storyPassage"] == "[storyPassage <- toMarket(s)]" );
  CHECK( t.contains( "monitor" ) );

  SUBCASE( "session state and graph" )
  {
    auto s = client.Get( "/sessions/" + id );
    REQUIRE( s );
    auto j = json::parse( s->body );
    CHECK( j["state"] == t["next_state"] );
    CHECK( j["trace"].size() == 1u );
    CHECK( j["artifact_id"] == "adventure" );
    auto g = client.Get( "/artifacts/adventure/graph" );
    REQUIRE( g );
    CHECK( json::parse( g->body ) == codegen::graph( machine ) );
    CHECK( slurp( persist / ( id + ".jsonl" ) ).find( "toMarket" ) != std::string::npos );
  }

  SUBCASE( "errors" )
  {
    CHECK( client.Get( "/sessions/nope" )->status == 404 );
    CHECK( client.Get( "/artifacts/nope/graph" )->status == 404 );
    CHECK( client.Post( "/sessions", R"({"artifact_id":"nope"})", "application/json" )->status == 404 );
    CHECK( client.Post( "/sessions/" + id + "/turns", "{oops", "application/json" )->status == 400 );
    CHECK( client.Post( "/sessions/" + id + "/turns", R"({"user_prompt":3})", "application/json" )->status == 400 );

    auto failed = client.Post( "/sessions/" + id + "/turns", R"({"user_prompt":"boom"})", "application/json" );
    CHECK( failed->status == 502 );
    CHECK( json::parse( failed->body )["exit_code"] == 5 );
    CHECK( json::parse( client.Get( "/sessions/" + id )->body )["turn"] == 1 );
  }

  SUBCASE( "turns of one session are serialized" )
  {
    std::vector<std::thread> threads;
    std::mutex m;
    std::vector<int> seen;
    for ( int k = 0; k < 4; ++k )
      threads.emplace_back( [&] {
        httplib::Client c( "127.0.0.1", server.port );
        for ( int n = 0; n < 5; ++n )
        {
          auto r = c.Post( "/sessions/" + id + "/turns", R"({"user_prompt":"onward"})", "application/json" );
          REQUIRE( r );
          std::lock_guard lock( m );
          seen.push_back( json::parse( r->body )["turn"].get<int>() );
        }
      } );
    for ( auto& th : threads )
      th.join();
    std::set<int> distinct( seen.begin(), seen.end() );
    CHECK( distinct.size() == 20u );
    CHECK( *distinct.begin() == 1 );
    CHECK( *distinct.rbegin() == 20 );

    auto j = json::parse( client.Get( "/sessions/" + id )->body );
    int expected = 0;
    for ( auto const& turn_json : j["trace"] )
      CHECK( turn_json["turn"] == expected++ );
    CHECK( j["trace"].size() == 21u );
  }
}
