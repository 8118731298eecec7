#include <tslagent/world.hpp>

#include <algorithm>
#include <cctype>

namespace tslagent::world {

namespace {

std::string lower( std::string s )
{
  std::transform( s.begin(), s.end(), s.begin(), []( unsigned char c ) { return std::tolower( c ); } );
  return s;
}

std::string strip_prefix( std::string const& symbol, std::string const& prefix )
{
  if ( symbol.size() <= prefix.size() || symbol.compare( 0, prefix.size(), prefix ) != 0 ||
       !std::isupper( static_cast<unsigned char>( symbol[prefix.size()] ) ) )
    return {};
  return lower( symbol.substr( prefix.size() ) );
}

std::uint64_t mix( std::uint64_t x )
{
  x += 0x9e3779b97f4a7c15ull;
  x = ( x ^ ( x >> 30 ) ) * 0xbf58476d1ce4e5b9ull;
  x = ( x ^ ( x >> 27 ) ) * 0x94d049bb133111ebull;
  return x ^ ( x >> 31 );
}

std::string visited_list( std::string const& summary )
{
  auto start = summary.find( "visited:" );
  if ( start == std::string::npos )
    return {};
  auto end = summary.find( '\n', start );
  auto list = summary.substr( start + 8, end == std::string::npos ? std::string::npos : end - start - 8 );
  list.erase( 0, list.find_first_not_of( ' ' ) );
  return list;
}

} // namespace

WorldOptions world_options_from_json( runtime::json const& j )
{
  WorldOptions o;
  o.p_halluc = j.value( "p_halluc", o.p_halluc );
  auto style = j.value( "fault_style", std::string( "random_other" ) );
  if ( style == "random_other" )
    o.style = FaultStyle::RandomOther;
  else if ( style == "detectable" )
    o.style = FaultStyle::Detectable;
  else
    throw runtime::BindingError( "unknown fault_style '" + style + "'" );
  o.fault_location = j.value( "fault_location", o.fault_location );
  o.locations = j.value( "locations", o.locations );
  if ( o.p_halluc < 0.0 || o.p_halluc > 1.0 )
    throw runtime::BindingError( "p_halluc must lie in [0, 1]" );
  return o;
}

std::string location_of_generator( std::string const& symbol )
{
  return strip_prefix( symbol, "to" );
}

std::string location_of_predicate( std::string const& symbol )
{
  return strip_prefix( symbol, "in" );
}

std::string location_tag( std::string const& text )
{
  static std::string const open = "[location=";
  auto pos = text.rfind( open );
  if ( pos == std::string::npos )
    return {};
  auto end = text.find( ']', pos );
  if ( end == std::string::npos )
    return {};
  return text.substr( pos + open.size(), end - pos - open.size() );
}

bool is_safe_choice( std::string const& user_prompt )
{
  auto p = lower( user_prompt );
  return p.find( "safe" ) != std::string::npos && p.find( "unsafe" ) == std::string::npos &&
         p.find( "risky" ) == std::string::npos;
}

std::mt19937_64 call_rng( CallContext const& ctx, std::string const& symbol )
{
  std::uint64_t h = mix( ctx.seed );
  h = mix( h ^ static_cast<std::uint64_t>( ctx.turn ) );
  h = mix( h ^ static_cast<std::uint64_t>( ctx.call_index ) );
  for ( unsigned char c : symbol )
    h = mix( h ^ c );
  return std::mt19937_64( h );
}

AdventureWorld::AdventureWorld( spec::SignalTable const& table, WorldOptions options )
    : options_( std::move( options ) ), locations_( options_.locations )
{
  if ( locations_.empty() )
    for ( auto const& [name, arity] : table.functions )
      if ( auto loc = location_of_generator( name ); !loc.empty() )
        locations_.push_back( loc );
  if ( std::find( locations_.begin(), locations_.end(), options_.fault_location ) == locations_.end() )
    locations_.push_back( options_.fault_location );
  std::sort( locations_.begin(), locations_.end() );
}

bool AdventureWorld::predicate( std::string const& symbol, std::vector<Value> const& args, CallContext const& ctx )
{
  if ( auto loc = location_of_predicate( symbol ); !loc.empty() && !args.empty() )
    return location_tag( runtime::text_of( args.front() ) ) == loc;
  if ( lower( symbol ) == "safe" )
    return is_safe_choice( ctx.user_prompt );
  return false;
}

std::string AdventureWorld::faulty_location( std::string const& requested, std::mt19937_64& rng ) const
{
  if ( options_.style == FaultStyle::Detectable )
  {
    if ( requested != options_.fault_location )
      return options_.fault_location;
    std::vector<std::string> others;
    for ( auto const& l : locations_ )
      if ( l != options_.fault_location )
        others.push_back( l );
    if ( others.empty() )
      return requested;
    return others[std::uniform_int_distribution<std::size_t>( 0, others.size() - 1 )( rng )];
  }
  std::vector<std::string> others;
  for ( auto const& l : locations_ )
    if ( l != requested )
      others.push_back( l );
  if ( others.empty() )
    return requested;
  return others[std::uniform_int_distribution<std::size_t>( 0, others.size() - 1 )( rng )];
}

std::string AdventureWorld::passage( std::string const& location, std::string const& user_prompt )
{
  auto text = "[location=" + location + "] The reader arrives at the " + location + ".";
  if ( !user_prompt.empty() )
    text += " They chose: " + user_prompt;
  return text;
}

Value AdventureWorld::generate( std::string const& symbol, std::vector<Value> const& args, CallContext const& ctx )
{
  auto loc = location_of_generator( symbol );
  if ( loc.empty() )
  {
    std::string text = symbol + "(";
    for ( std::size_t k = 0; k < args.size(); ++k )
      text += ( k ? ", " : "" ) + runtime::text_of( args[k] );
    return text + ")";
  }
  auto rng = call_rng( ctx, symbol );
  if ( std::uniform_real_distribution<double>( 0.0, 1.0 )( rng ) < options_.p_halluc )
    loc = faulty_location( loc, rng );
  return passage( loc, ctx.user_prompt );
}

std::string AdventureWorld::summarize( std::string const& summary, std::string const& passage, CallContext const& )
{
  auto visited = visited_list( summary );
  auto loc = location_tag( passage );
  if ( !loc.empty() && ( ", " + visited + "," ).find( ", " + loc + "," ) == std::string::npos )
    visited += ( visited.empty() ? "" : ", " ) + loc;
  std::string result = "visited: " + visited;
  if ( !loc.empty() )
    result += "\nnow: [location=" + loc + "]";
  return result;
}

} // namespace tslagent::world
