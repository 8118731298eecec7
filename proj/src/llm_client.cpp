#include <tslagent/runtime.hpp>

#include <httplib.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace tslagent::runtime {

Journal::Journal( std::string path ) : path_( std::move( path ) )
{
  std::ifstream in( path_ );
  std::string line;
  int number = 0;
  while ( std::getline( in, line ) )
  {
    ++number;
    if ( line.empty() )
      continue;
    json entry;
    try
    {
      entry = json::parse( line );
      entries_[entry.at( "hash" ).get<std::string>()] = entry.at( "response" ).get<std::string>();
    }
    catch ( json::exception const& e )
    {
      throw OracleError( path_ + ":" + std::to_string( number ) + ": malformed journal entry: " + e.what() );
    }
  }
}

std::string Journal::request_hash( json const& request )
{
  std::uint64_t h = 1469598103934665603ull;
  for ( unsigned char c : request.dump() )
  {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf( buf, sizeof buf, "%016llx", static_cast<unsigned long long>( h ) );
  return buf;
}

std::optional<std::string> Journal::find( json const& request ) const
{
  std::lock_guard lock( mutex_ );
  auto it = entries_.find( request_hash( request ) );
  if ( it == entries_.end() )
    return std::nullopt;
  return it->second;
}

void Journal::append( json const& request, std::string const& response )
{
  std::lock_guard lock( mutex_ );
  auto hash = request_hash( request );
  if ( entries_.count( hash ) )
    return;
  entries_[hash] = response;
  std::ofstream out( path_, std::ios::app );
  if ( !out )
    throw OracleError( "cannot append to journal " + path_ );
  out << json{ { "hash", hash }, { "request", request }, { "response", response } }.dump() << '\n';
}

std::size_t Journal::size() const
{
  std::lock_guard lock( mutex_ );
  return entries_.size();
}

ChatClient::ChatClient( LlmSettings settings ) : settings_( std::move( settings ) )
{
  if ( !settings_.journal.empty() )
    journal_ = std::make_unique<Journal>( settings_.journal );
}

std::string ChatClient::complete( json const& request )
{
  if ( journal_ )
    if ( auto hit = journal_->find( request ) )
      return *hit;
  if ( settings_.mode == "replay" )
    throw OracleError( "no journal entry for request " + Journal::request_hash( request ) );
  auto reply = post( request );
  if ( journal_ && settings_.mode == "record" )
    journal_->append( request, reply );
  return reply;
}

std::string ChatClient::post( json const& request )
{
  auto const& url = settings_.base_url;
  auto scheme_end = url.find( "://" );
  if ( scheme_end == std::string::npos )
    throw OracleError( "base_url must include a scheme: " + url );
  auto path_start = url.find( '/', scheme_end + 3 );
  std::string origin = path_start == std::string::npos ? url : url.substr( 0, path_start );
  std::string prefix = path_start == std::string::npos ? "" : url.substr( path_start );
  while ( !prefix.empty() && prefix.back() == '/' )
    prefix.pop_back();

  httplib::Client client( origin );
  client.set_connection_timeout( settings_.timeout_seconds );
  client.set_read_timeout( settings_.timeout_seconds );
  httplib::Headers headers;
  if ( char const* key = std::getenv( settings_.api_key_env.c_str() ) )
    headers.emplace( "Authorization", std::string( "Bearer " ) + key );

  auto res = client.Post( prefix + "/chat/completions", headers, request.dump(), "application/json" );
  if ( !res )
    throw OracleError( "chat request to " + origin + " failed: " + httplib::to_string( res.error() ) );
  if ( res->status != 200 )
    throw OracleError( "chat request returned HTTP " + std::to_string( res->status ) + ": " + res->body );
  try
  {
    return json::parse( res->body ).at( "choices" ).at( 0 ).at( "message" ).at( "content" ).get<std::string>();
  }
  catch ( json::exception const& e )
  {
    throw OracleError( std::string( "malformed chat response: " ) + e.what() );
  }
}

} // namespace tslagent::runtime
