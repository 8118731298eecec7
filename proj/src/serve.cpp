#include <tslagent/codegen.hpp>
#include <tslagent/serve.hpp>

#include <httplib.h>

#include <filesystem>
#include <fstream>

namespace tslagent::serve {

Service::Service( std::string persist_dir ) : persist_dir_( std::move( persist_dir ) )
{
  if ( !persist_dir_.empty() )
    std::filesystem::create_directories( persist_dir_ );
}

void Service::add_artifact( std::string const& id, Artifact artifact )
{
  std::lock_guard lock( mutex_ );
  artifacts_[id] = std::make_shared<Artifact const>( std::move( artifact ) );
}

std::string Service::create_session( std::string const& artifact_id, std::uint64_t seed )
{
  std::lock_guard lock( mutex_ );
  auto it = artifacts_.find( artifact_id );
  if ( it == artifacts_.end() )
    throw ServiceError( 404, "unknown artifact '" + artifact_id + "'" );
  auto const& a = *it->second;
  auto entry = std::shared_ptr<Entry>(
      new Entry{ {}, artifact_id, runtime::Session( a.machine, a.registry, seed ), std::nullopt } );
  if ( a.spec )
    entry->monitor.emplace( *a.spec );
  auto id = "s" + std::to_string( next_id_++ );
  sessions_[id] = entry;
  return id;
}

std::shared_ptr<Service::Entry> Service::find( std::string const& session_id ) const
{
  std::lock_guard lock( mutex_ );
  auto it = sessions_.find( session_id );
  if ( it == sessions_.end() )
    throw ServiceError( 404, "unknown session '" + session_id + "'" );
  return it->second;
}

json Service::describe( std::string const& id, Entry const& e ) const
{
  auto j = e.session.to_json();
  j["session_id"] = id;
  j["artifact_id"] = e.artifact;
  if ( e.monitor )
    j["monitor"] = e.monitor->to_json();
  return j;
}

json Service::play_turn( std::string const& session_id, std::string const& user_prompt )
{
  auto e = find( session_id );
  std::lock_guard lock( e->mutex );
  auto t = e->session.step_turn( user_prompt );
  if ( e->monitor )
    e->monitor->observe_turn( t );
  if ( !persist_dir_.empty() )
  {
    std::ofstream out( std::filesystem::path( persist_dir_ ) / ( session_id + ".jsonl" ), std::ios::app );
    out << t.jsonl() << '\n';
  }
  auto j = t.to_json();
  if ( e->monitor )
    j["monitor"] = e->monitor->to_json();
  return j;
}

json Service::session( std::string const& session_id ) const
{
  auto e = find( session_id );
  std::lock_guard lock( e->mutex );
  return describe( session_id, *e );
}

json Service::artifact_graph( std::string const& artifact_id ) const
{
  std::lock_guard lock( mutex_ );
  auto it = artifacts_.find( artifact_id );
  if ( it == artifacts_.end() )
    throw ServiceError( 404, "unknown artifact '" + artifact_id + "'" );
  return codegen::graph( it->second->machine );
}

namespace {

void reply( httplib::Response& res, int status, json const& body )
{
  res.status = status;
  res.set_content( body.dump(), "application/json" );
}

template <class Fn>
void guarded( httplib::Response& res, Fn&& fn )
{
  try
  {
    fn();
  }
  catch ( ServiceError const& e )
  {
    reply( res, e.status, { { "error", e.what() } } );
  }
  catch ( runtime::OracleError const& e )
  {
    json calls = json::array();
    for ( auto const& c : e.transcript() )
      calls.push_back( c.to_json() );
    reply( res, 502, { { "error", e.what() }, { "class", "oracle" }, { "exit_code", 5 }, { "calls", calls } } );
  }
  catch ( json::exception const& e )
  {
    reply( res, 400, { { "error", std::string( "bad request: " ) + e.what() } } );
  }
}

json body_of( httplib::Request const& req )
{
  if ( req.body.empty() )
    return json::object();
  auto j = json::parse( req.body );
  if ( !j.is_object() )
    throw ServiceError( 400, "request body must be a JSON object" );
  return j;
}

} // namespace

void Service::mount( httplib::Server& server )
{
  server.Post( "/sessions", [this]( httplib::Request const& req, httplib::Response& res ) {
    guarded( res, [&] {
      auto j = body_of( req );
      std::string artifact = j.value( "artifact_id", j.value( "artifact-id", std::string{} ) );
      if ( artifact.empty() )
      {
        std::lock_guard lock( mutex_ );
        if ( artifacts_.size() != 1 )
          throw ServiceError( 400, "artifact_id is required" );
        artifact = artifacts_.begin()->first;
      }
      auto id = create_session( artifact, j.value( "seed", std::uint64_t{ 0 } ) );
      reply( res, 201, { { "session_id", id }, { "artifact_id", artifact } } );
    } );
  } );
  server.Post( R"(/sessions/([^/]+)/turns)", [this]( httplib::Request const& req, httplib::Response& res ) {
    guarded( res, [&] {
      auto j = body_of( req );
      if ( !j.contains( "user_prompt" ) || !j["user_prompt"].is_string() )
        throw ServiceError( 400, "user_prompt must be a string" );
      reply( res, 200, play_turn( req.matches[1], j["user_prompt"].get<std::string>() ) );
    } );
  } );
  server.Get( R"(/sessions/([^/]+))", [this]( httplib::Request const& req, httplib::Response& res ) {
    guarded( res, [&] { reply( res, 200, session( req.matches[1] ) ); } );
  } );
  server.Get( R"(/artifacts/([^/]+)/graph)", [this]( httplib::Request const& req, httplib::Response& res ) {
    guarded( res, [&] { reply( res, 200, artifact_graph( req.matches[1] ) ); } );
  } );
}

} // namespace tslagent::serve
