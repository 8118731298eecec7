#include "support.hpp"

#include <tslagent/runtime.hpp>
#include <tslagent/world.hpp>

#include <doctest.h>
#include <httplib.h>

#include <cstdio>
#include <deque>
#include <thread>

using namespace tslagent;
using runtime::json;
using runtime::Value;

namespace {

struct Agent
{
  ltl::LtlSpec spec;
  synth::MealyMachine machine;
};

Agent const& adventure_agent()
{
  static Agent const agent = [] {
    auto spec = ltl::abstract_to_ltl( spec::compile_spec( testing_support::load_spec( "adventure.tsl" ) ) );
    auto r = synth::synthesize( spec );
    REQUIRE( r.realizable() );
    return Agent{ spec, *r.machine };
  }();
  return agent;
}

Agent make_agent( std::string const& text )
{
  auto spec = ltl::abstract_to_ltl( spec::compile_spec( text ) );
  auto r = synth::synthesize( spec );
  REQUIRE( r.realizable() );
  return { spec, *r.machine };
}

runtime::TermRegistry scripted_registry( spec::SignalTable const& table, double p_halluc = 0.0 )
{
  world::WorldOptions options;
  options.p_halluc = p_halluc;
  return runtime::bind_terms( table, runtime::scripted_binding_config( table ),
                              std::make_shared<world::AdventureWorld>( table, options ) );
}

std::string trace_text( runtime::Session const& s )
{
  std::string out;
  for ( auto const& t : s.trace() )
    out += t.jsonl() + "\n";
  return out;
}

class CannedChat : public runtime::ChatBackend
{
public:
  std::deque<std::string> replies;
  std::vector<json> requests;
  std::string fallback = "0";

  std::string complete( json const& request ) override
  {
    requests.push_back( request );
    if ( replies.empty() )
      return fallback;
    auto r = replies.front();
    replies.pop_front();
    return r;
  }
};

json llm_bindings()
{
  return json::parse( R"({
    "llm": { "model": "test-model", "seed": 7 },
    "predicates": {
      "inCave": { "kind": "llm", "prompt": "Is the reader in a cave? {summary}" },
      "inMarket": { "kind": "scripted" },
      "inTown": { "kind": "scripted" }
    },
    "functions": {
      "toCave": { "kind": "scripted" },
      "toMarket": { "kind": "llm", "prompt": "{user_prompt} Go to a market. Story: {summary}" },
      "toTown": { "kind": "scripted" }
    },
    "summarizer": { "kind": "scripted", "cell": "s" }
  })" );
}

} // namespace

TEST_CASE( "fresh adventure session" )
{
  auto const& a = adventure_agent();
  auto session = runtime::start_session( a.machine, scripted_registry( a.spec.signals ), 1 );
  CHECK( session.state() == 0 );
  CHECK( session.turn() == 0 );
  CHECK( session.cells().at( "s" ) == Value{ std::string{} } );

  auto t = session.step_turn( "look around" );
  CHECK( t.turn == 0 );
  CHECK( t.inputs == 0u );
  for ( auto const& [term, value] : t.valuation )
    CHECK_FALSE( value );
  CHECK( t.updates.at( "storyPassage" ) == "[storyPassage <- toMarket(s)]" );
  CHECK( world::location_tag( runtime::text_of( t.generated.at( "storyPassage" ) ) ) == "market" );
  CHECK( world::location_tag( runtime::text_of( session.cells().at( "s" ) ) ) == "market" );
  CHECK( session.turn() == 1 );
}

TEST_CASE( "turn zero never goes to the cave" )
{
  auto const& a = adventure_agent();
  for ( std::uint64_t seed = 0; seed < 20; ++seed )
  {
    auto session = runtime::start_session( a.machine, scripted_registry( a.spec.signals, 0.5 ), seed );
    auto t = session.step_turn( "begin" );
    CHECK( t.updates.at( "storyPassage" ) != "[storyPassage <- toCave(s)]" );
  }
}

TEST_CASE( "sessions are deterministic in the seed" )
{
  auto const& a = adventure_agent();
  auto run = [&]( std::uint64_t seed ) {
    auto session = runtime::start_session( a.machine, scripted_registry( a.spec.signals, 0.3 ), seed );
    for ( int k = 0; k < 20; ++k )
      session.step_turn( "turn " + std::to_string( k ) );
    CHECK( runtime::replays_on_machine( a.machine, session.trace() ) );
    return trace_text( session );
  };
  auto first = run( 11 );
  CHECK( first == run( 11 ) );
  bool differs = false;
  for ( std::uint64_t seed = 12; seed < 20 && !differs; ++seed )
    differs = run( seed ) != first;
  CHECK( differs );
}

TEST_CASE( "fault-free play visits market and town before the cave" )
{
  auto const& a = adventure_agent();
  auto session = runtime::start_session( a.machine, scripted_registry( a.spec.signals ), 5 );
  std::set<std::string> seen;
  bool cave = false;
  for ( int k = 0; k < 20; ++k )
  {
    auto t = session.step_turn( "continue" );
    auto loc = world::location_tag( runtime::text_of( t.generated.at( "storyPassage" ) ) );
    if ( loc == "cave" )
    {
      CHECK( seen.count( "market" ) );
      CHECK( seen.count( "town" ) );
      cave = true;
    }
    seen.insert( loc );
  }
  CHECK( cave );
}

TEST_CASE( "counter updates use the builtin" )
{
  auto a = make_agent( R"(
    initially assume { ! inTown(s); }
    always assume { [storyPassage <- toTown(s)] <-> X inTown(s); }
    always guarantee {
      (safe && inTown(s)) <-> [safeCount <- safeCount + 1];
      [storyPassage <- toTown(s)];
    })" );
  auto session = runtime::start_session( a.machine, scripted_registry( a.spec.signals ), 3 );
  CHECK( session.cells().at( "safeCount" ) == Value{ std::int64_t{ 0 } } );
  std::vector<std::string> prompts = { "the safe path", "the safe path", "the risky path", "a safe choice" };
  std::vector<std::int64_t> expected = { 0, 1, 1, 2 };
  for ( std::size_t k = 0; k < prompts.size(); ++k )
  {
    auto t = session.step_turn( prompts[k] );
    CAPTURE( k );
    CHECK( std::get<std::int64_t>( session.cells().at( "safeCount" ) ) == expected[k] );
    bool builtin = false;
    for ( auto const& c : t.calls )
      builtin |= c.symbol == "add" && c.backend == "builtin";
    CHECK( builtin == ( k == 1 || k == 3 ) );
  }
}

TEST_CASE( "binding errors name the symbol" )
{
  auto const& table = adventure_agent().spec.signals;
  auto world = std::make_shared<world::AdventureWorld>( table, world::WorldOptions{} );
  auto config = runtime::scripted_binding_config( table );

  auto missing = config;
  missing.predicates.erase( "inTown" );
  CHECK_THROWS_WITH_AS( runtime::bind_terms( table, missing, world ), doctest::Contains( "inTown" ),
                        runtime::BindingError );

  auto extra = config;
  extra.functions["toMoon"] = extra.functions.at( "toCave" );
  CHECK_THROWS_WITH_AS( runtime::bind_terms( table, extra, world ), doctest::Contains( "toMoon" ),
                        runtime::BindingError );

  auto no_placeholder = runtime::binding_config_from_json( llm_bindings() );
  no_placeholder.predicates.at( "inCave" ).prompt = "Is the reader in a cave?";
  CHECK_THROWS_WITH_AS( runtime::bind_terms( table, no_placeholder, world, std::make_shared<CannedChat>() ),
                        doctest::Contains( "{summary}" ), runtime::BindingError );

  CHECK_THROWS_WITH_AS( runtime::bind_terms( table, runtime::binding_config_from_json( llm_bindings() ), world ),
                        doctest::Contains( "chat backend" ), runtime::BindingError );
  CHECK_THROWS_AS( runtime::binding_config_from_json( json::parse( R"({"predicates":{"a":{"kind":"magic"}}})" ) ),
                   runtime::BindingError );
}

TEST_CASE( "llm predicates need an exact 0 or 1" )
{
  auto const& a = adventure_agent();
  auto const& table = a.spec.signals;
  auto chat = std::make_shared<CannedChat>();
  auto registry = runtime::bind_terms( table, runtime::binding_config_from_json( llm_bindings() ),
                                       std::make_shared<world::AdventureWorld>( table, world::WorldOptions{} ), chat );
  auto session = runtime::start_session( a.machine, registry, 0 );

  SUBCASE( "clean reply" )
  {
    chat->replies = { " 0\n", "[location=market] A market." };
    auto t = session.step_turn( "hello" );
    CHECK_FALSE( t.valuation.at( "inCave(s)" ) );
    REQUIRE( chat->requests.size() == 2u );
    auto const& req = chat->requests.front();
    CHECK( req["temperature"] == 0 );
    CHECK( req["seed"] == 7 );
    CHECK( req["model"] == "test-model" );
    CHECK( req["messages"][0]["content"] == "Is the reader in a cave? " );
    auto gen = chat->requests.back()["messages"][0]["content"].get<std::string>();
    CHECK( gen.rfind( "hello Go to a market.", 0 ) == 0u );
    CHECK( runtime::text_of( t.generated.at( "storyPassage" ) ) == "[location=market] A market." );
  }
  SUBCASE( "one retry" )
  {
    chat->replies = { "No.", "0", "[location=market] A market." };
    auto t = session.step_turn( "hello" );
    CHECK_FALSE( t.valuation.at( "inCave(s)" ) );
    CHECK( chat->requests[1]["messages"].size() == 3u );
  }
  SUBCASE( "two bad replies abort the turn" )
  {
    chat->replies = { "No.", "Still no." };
    auto before = session.to_json();
    try
    {
      session.step_turn( "hello" );
      FAIL( "expected an oracle error" );
    }
    catch ( runtime::OracleError const& e )
    {
      CHECK( std::string( e.what() ).find( "inCave" ) != std::string::npos );
      REQUIRE( e.transcript().size() == 2u );
      CHECK( e.transcript()[1].response == "Still no." );
    }
    CHECK( session.to_json() == before );
    CHECK( session.turn() == 0 );
  }
}

TEST_CASE( "journal records and replays" )
{
  auto path = testing_support::source_path( "build/test_journal.jsonl" );
  std::remove( path.c_str() );
  json request = { { "model", "m" }, { "messages", json::array() }, { "seed", 1 }, { "temperature", 0 } };
  {
    runtime::Journal j( path );
    CHECK_FALSE( j.find( request ) );
    j.append( request, "1" );
    CHECK( j.find( request ) == std::optional<std::string>( "1" ) );
  }
  runtime::Journal reloaded( path );
  CHECK( reloaded.size() == 1u );
  CHECK( reloaded.find( request ) == std::optional<std::string>( "1" ) );
  CHECK( runtime::Journal::request_hash( request ).size() == 16u );

  runtime::LlmSettings settings;
  settings.mode = "replay";
  settings.journal = path;
  settings.base_url = "http://127.0.0.1:1";
  runtime::ChatClient client( settings );
  CHECK( client.complete( request ) == "1" );
  auto other = request;
  other["seed"] = 2;
  CHECK_THROWS_WITH_AS( client.complete( other ), doctest::Contains( "no journal entry" ), runtime::OracleError );
  std::remove( path.c_str() );
}

TEST_CASE( "chat client speaks the completions protocol" )
{
  httplib::Server server;
  json seen;
  server.Post( "/v1/chat/completions", [&]( httplib::Request const& req, httplib::Response& res ) {
    seen = json::parse( req.body );
    seen["auth"] = req.get_header_value( "Authorization" );
    res.set_content( json{ { "choices", { { { "message", { { "role", "assistant" }, { "content", "1" } } } } } } }.dump(),
                     "application/json" );
  } );
  int port = server.bind_to_any_port( "127.0.0.1" );
  std::thread worker( [&] { server.listen_after_bind(); } );
  server.wait_until_ready();

  auto path = testing_support::source_path( "build/test_record.jsonl" );
  std::remove( path.c_str() );
  runtime::LlmSettings settings;
  settings.base_url = "http://127.0.0.1:" + std::to_string( port ) + "/v1";
  settings.mode = "record";
  settings.journal = path;
  settings.api_key_env = "TSLAGENT_TEST_KEY";
  ::setenv( "TSLAGENT_TEST_KEY", "secret", 1 );
  json request = { { "model", "m" }, { "messages", json::array( { { { "role", "user" }, { "content", "q" } } } ) },
                   { "seed", 3 }, { "temperature", 0 } };
  {
    runtime::ChatClient client( settings );
    CHECK( client.complete( request ) == "1" );
  }
  server.stop();
  worker.join();
  CHECK( seen["messages"][0]["content"] == "q" );
  CHECK( seen["auth"] == "Bearer secret" );

  settings.mode = "replay";
  runtime::ChatClient replay( settings );
  CHECK( replay.complete( request ) == "1" );
  std::remove( path.c_str() );
}
