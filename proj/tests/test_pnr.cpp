// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <afpga/pnr.hpp>

#include <set>

using namespace afpga;

namespace
{

placement crossing_placement( std::vector<std::pair<int, int>> const& pin_pairs )
{
  placement pl;
  pl.sites = { { 0, 0 }, { 0, 1 } };
  pl.input_pin.resize( 2 );
  pl.output_pin.resize( 2 );
  int i = 0;
  for ( auto const& [out_pin, in_pin] : pin_pairs )
  {
    std::string const net = "n" + std::to_string( i++ );
    pl.output_pin[0][net] = out_pin;
    pl.input_pin[1][net] = in_pin;
  }
  return pl;
}

} // namespace

TEST_CASE( "site order walks outward from the center" )
{
  fabric_params p;
  p.rows = p.cols = 3;
  auto const order = site_order( p );
  REQUIRE( order.size() == 9 );
  CHECK( order[0] == std::pair<int, int>{ 1, 1 } );
  std::set<std::pair<int, int>> const ring( order.begin() + 1, order.begin() + 5 );
  CHECK( ring == std::set<std::pair<int, int>>{ { 0, 1 }, { 1, 0 }, { 1, 2 }, { 2, 1 } } );
  CHECK( std::set<std::pair<int, int>>( order.begin(), order.end() ).size() == 9 );

  auto const four = site_order( {} );
  CHECK( four.size() == 16 );
  CHECK( four[0] == std::pair<int, int>{ 1, 1 } );
}

TEST_CASE( "a lone cluster takes the central site" )
{
  auto const n = parse_netlist( "module m\nport in a\nport out y\ncell g1 INV a -> y\nend\n" );
  auto const p = pack( tech_map( n ), n );
  auto const f = build_fabric( {} );
  auto const pl = place( p, f, 1 );
  REQUIRE( pl.sites.size() == 1 );
  CHECK( pl.sites[0] == site_order( f.params )[0] );
  CHECK( pl == place( p, f, 99 ) );

  REQUIRE( pl.input_pin[0].count( "a" ) );
  REQUIRE( pl.output_pin[0].count( "y" ) );
  CHECK( pl.input_pin[0].at( "a" ) >= 0 );
  CHECK( pl.input_pin[0].at( "a" ) < f.params.plb_inputs );
  CHECK( pl.output_pin[0].at( "y" ) >= 0 );
  CHECK( pl.output_pin[0].at( "y" ) < f.params.plb_outputs );
}

TEST_CASE( "placement is deterministic per seed" )
{
  auto const n = make_builtin( "fa_qdi" );
  auto const p = pack( tech_map( n ), n );
  auto const f = build_fabric( {} );
  auto const a = place( p, f, 7 );
  auto const b = place( p, f, 7 );
  CHECK( a == b );
  for ( auto const& [r, c] : a.sites )
  {
    CHECK( r >= 0 );
    CHECK( r < f.params.rows );
    CHECK( c >= 0 );
    CHECK( c < f.params.cols );
  }
  std::set<std::pair<int, int>> const distinct( a.sites.begin(), a.sites.end() );
  CHECK( distinct.size() == a.sites.size() );
}

TEST_CASE( "placement rejects more clusters than sites" )
{
  auto const n = make_builtin( "fa_qdi" );
  auto const p = pack( tech_map( n ), n );
  fabric_params small;
  small.rows = small.cols = 1;
  small.channel_width = 1;
  CHECK_THROWS_MATCHES( place( p, build_fabric( small ), 1 ), pnr_error,
                        Catch::Matchers::MessageMatches(
                            Catch::Matchers::ContainsSubstring( "too-many-clusters" ) ) );
}

TEST_CASE( "builtin designs route cleanly on the default fabric" )
{
  auto const f = build_fabric( {} );
  for ( auto const& name : builtin_names() )
  {
    INFO( "builtin " << name );
    auto const n = make_builtin( name );
    auto const p = pack( tech_map( n ), n );
    auto const pl = place( p, f, 1 );
    auto const r = route( pl, f );
    CHECK( check_routes( r, f ).empty() );
    CHECK( r == route( pl, f ) );

    std::set<std::string> nets;
    for ( auto const& tree : r.nets )
    {
      CHECK( nets.insert( tree.net ).second );
      CHECK( tree.driver >= 0 );
      CHECK( !tree.sinks.empty() );
      CHECK( !tree.arcs.empty() );
    }
  }
}

TEST_CASE( "a design without inter-cluster nets routes to nothing" )
{
  auto const n = make_builtin( "c_element" );
  auto const p = pack( tech_map( n ), n );
  fabric_params small;
  small.rows = small.cols = 1;
  small.channel_width = 1;
  auto const f = build_fabric( small );
  auto const r = route( place( p, f, 1 ), f );
  CHECK( r.nets.empty() );
  CHECK( check_routes( r, f ).empty() );
}

TEST_CASE( "route report names every net" )
{
  auto const f = build_fabric( {} );
  auto const n = make_builtin( "fa_qdi" );
  auto const p = pack( tech_map( n ), n );
  auto const r = route( place( p, f, 1 ), f );
  REQUIRE( !r.nets.empty() );
  auto const report = route_report( r, f );
  std::size_t lines = 0;
  for ( char ch : report )
    lines += ( ch == '\n' );
  CHECK( lines == r.nets.size() );
  for ( auto const& tree : r.nets )
    CHECK( report.find( tree.net + ": " ) != std::string::npos );
  CHECK( report.find( "segments]" ) != std::string::npos );
  CHECK( report.find( "plb" ) != std::string::npos );
}

TEST_CASE( "demand beyond the channel cut is unroutable" )
{
  fabric_params p;
  p.rows = 1;
  p.cols = 2;
  p.channel_width = 1;
  auto const f = build_fabric( p );

  // three nets fit: one per horizontal row plus the shared middle column.
  // pins sit on side pin % 4 (n, e, s, w), which fixes each net's end groups.
  std::vector<std::pair<int, int>> const fits = { { 0, 0 }, { 2, 2 }, { 1, 3 } };
  auto const ok = route( crossing_placement( fits ), f );
  CHECK( check_routes( ok, f ).empty() );

  // a fourth crossing net has no free track left on any cut
  auto full = fits;
  full.push_back( { 3, 1 } );
  CHECK_THROWS_MATCHES(
      route( crossing_placement( full ), f ), pnr_error,
      Catch::Matchers::MessageMatches( Catch::Matchers::ContainsSubstring( "unroutable" ) ) );
}

TEST_CASE( "route checker flags corrupted trees" )
{
  auto const f = build_fabric( {} );
  auto const n = make_builtin( "fa_qdi" );
  auto const p = pack( tech_map( n ), n );
  auto const good = route( place( p, f, 1 ), f );
  REQUIRE( good.nets.size() >= 2 );

  auto has = []( diagnostics const& diags, std::string_view code ) {
    for ( auto const& d : diags )
      if ( d.code == code )
        return true;
    return false;
  };

  auto r = good;
  r.nets.push_back( r.nets[0] );
  r.nets.back().net = "shadow";
  CHECK( has( check_routes( r, f ), "overuse" ) );

  r = good;
  r.nets[0].arcs[0].second = r.nets[0].arcs[0].first;
  CHECK( has( check_routes( r, f ), "invalid-arc" ) );

  r = good;
  r.nets[0].arcs.push_back( r.nets[0].arcs[0] );
  auto diags = check_routes( r, f );
  CHECK( has( diags, "not-a-tree" ) );
  CHECK( !has( diags, "invalid-arc" ) );

  r = good;
  for ( std::size_t i = 0; i < r.nets[0].arcs.size(); ++i )
  {
    int const to = r.nets[0].arcs[i].second;
    if ( std::find( r.nets[0].sinks.begin(), r.nets[0].sinks.end(), to ) !=
         r.nets[0].sinks.end() )
    {
      r.nets[0].arcs.erase( r.nets[0].arcs.begin() + i );
      break;
    }
  }
  CHECK( has( check_routes( r, f ), "disconnected" ) );
}
