// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <afpga/cli.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace afpga;

namespace
{

struct cli_result
{
  int code;
  std::string out;
  std::string err;
};

cli_result cli( std::vector<std::string> const& args )
{
  std::ostringstream out, err;
  int const code = run_command( args, out, err );
  return { code, out.str(), err.str() };
}

} // namespace

TEST_CASE( "check reports clean builtins" )
{
  auto const r = cli( { "check", "--builtin", "fa_qdi" } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "check: ok" ) != std::string::npos );
  CHECK( r.err.empty() );
}

TEST_CASE( "check reads netlist files" )
{
  std::string const path = "cli_test_design.anet";
  {
    std::ofstream os( path );
    os << "module t\nport in a\nport out y\ncell g1 INV a -> y\nend\n";
  }
  auto const r = cli( { "check", path } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "check: ok" ) != std::string::npos );
  std::remove( path.c_str() );

  CHECK( cli( { "check", "no_such_file.anet" } ).code == 2 );
}

TEST_CASE( "check surfaces netlist diagnostics" )
{
  std::string const path = "cli_test_broken.anet";
  {
    std::ofstream os( path );
    os << "module t\nport in a\nport out y\ncell g1 AND2 a b -> y\nend\n";
  }
  auto const r = cli( { "check", path } );
  CHECK( r.code == 1 );
  CHECK( r.out.find( "dangling-input" ) != std::string::npos );
  std::remove( path.c_str() );
}

TEST_CASE( "usage errors exit with code two" )
{
  CHECK( cli( { "check" } ).code == 2 );                                   // no design
  CHECK( cli( { "frobnicate" } ).code == 2 );                              // no such command
  CHECK( cli( { "sim", "--builtin", "c_element", "--delays", "sideways" } ).code == 2 );
  CHECK( cli( { "sim", "--builtin", "c_element", "--tmax", "-3" } ).code == 2 );
  CHECK( cli( { "pack", "--rows" } ).code == 2 );                          // missing value
  auto const r = cli( { "check" } );
  CHECK( r.err.find( "usage error" ) != std::string::npos );
}

TEST_CASE( "runtime failures exit with code one" )
{
  auto const r = cli( { "check", "--builtin", "does_not_exist" } );
  CHECK( r.code == 1 );
  CHECK( r.err.find( "unknown-builtin" ) != std::string::npos );
}

TEST_CASE( "pack prints occupancy" )
{
  auto const r = cli( { "pack", "--builtin", "fa_qdi" } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "slots used: 12" ) != std::string::npos );
  CHECK( r.out.find( "plbs occupied: 5" ) != std::string::npos );
  CHECK( r.out.find( "filling ratio: 30.00%" ) != std::string::npos );

  auto const r2 = cli( { "pack", "--builtin", "fa_micropipeline" } );
  CHECK( r2.out.find( "filling ratio: 18.75%" ) != std::string::npos );
}

TEST_CASE( "pack emits machine-readable reports" )
{
  auto const r = cli( { "pack", "--builtin", "fa_qdi", "--json" } );
  REQUIRE( r.code == 0 );
  auto const j = nlohmann::json::parse( r.out );
  CHECK( j.at( "design" ) == "fa_qdi" );
  CHECK( j.at( "plbs_occupied" ) == 5 );
  CHECK( j.at( "slots_used" ) == 12 );
  CHECK( j.at( "filling_ratio" ).get<double>() == Catch::Approx( 0.30 ) );
}

TEST_CASE( "pnr reports sites and routes" )
{
  auto const r = cli( { "pnr", "--builtin", "fa_qdi" } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "cluster 0: plb(" ) != std::string::npos );
  CHECK( r.out.find( "routed: " ) != std::string::npos );
  CHECK( r.out.find( "segments]" ) != std::string::npos );

  auto const j = nlohmann::json::parse( cli( { "pnr", "--builtin", "fa_qdi", "--json" } ).out );
  CHECK( j.at( "design" ) == "fa_qdi" );
  CHECK( j.at( "routed" ).get<int>() > 0 );
}

TEST_CASE( "bitstream writes the expected image size" )
{
  std::string const path = "cli_test.afpg";
  auto const r = cli( { "bitstream", "--builtin", "c_element", "--rows", "1", "--cols", "1",
                        "--width", "1", "--out", path } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "(71 bytes)" ) != std::string::npos );
  std::ifstream is( path, std::ios::binary );
  REQUIRE( is.good() );
  std::string const data( ( std::istreambuf_iterator<char>( is ) ),
                          std::istreambuf_iterator<char>() );
  CHECK( data.size() == 71 );
  CHECK( data.substr( 0, 4 ) == "AFPG" );
  std::remove( path.c_str() );
}

TEST_CASE( "fabric simulation is the default and computes addition" )
{
  auto const r = cli( { "sim", "--builtin", "fa_qdi" } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "mode: fabric" ) != std::string::npos );
  CHECK( r.out.find( "tokens sum: 0 1 1 0 1 0 0 1" ) != std::string::npos );
  CHECK( r.out.find( "tokens cout: 0 0 0 1 0 1 1 1" ) != std::string::npos );
  CHECK( r.out.find( "hazards: 0" ) != std::string::npos );
}

TEST_CASE( "netlist simulation mode is selectable" )
{
  auto const r = cli( { "sim", "--builtin", "glitch_demo", "--model", "netlist" } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "mode: netlist" ) != std::string::npos );
  CHECK( r.out.find( "hazards: 0" ) == std::string::npos );

  auto const j = nlohmann::json::parse(
      cli( { "sim", "--builtin", "glitch_demo", "--model", "netlist", "--json" } ).out );
  CHECK( j.at( "hazards" ).get<int>() >= 1 );
  CHECK( j.at( "verdict" ) == "pass" );
}

TEST_CASE( "randomized trials report a robustness verdict" )
{
  auto const r =
      cli( { "sim", "--builtin", "fa_qdi", "--model", "netlist", "--delays", "random", "--trials", "5" } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "trials: 5" ) != std::string::npos );
  CHECK( r.out.find( "verdict: pass" ) != std::string::npos );

  auto const fail = cli( { "sim", "--builtin", "fa_micropipeline", "--model", "netlist", "--delays",
                           "random", "--trials", "5" } );
  CHECK( fail.code == 1 );
  CHECK( fail.out.find( "verdict: fail" ) != std::string::npos );
}

TEST_CASE( "simulation can dump a waveform file" )
{
  std::string const path = "cli_test.vcd";
  auto const r = cli( { "sim", "--builtin", "c_element", "--model", "netlist", "--vcd", path } );
  CHECK( r.code == 0 );
  std::ifstream is( path );
  REQUIRE( is.good() );
  std::string line;
  std::getline( is, line );
  CHECK( line.find( "$timescale" ) != std::string::npos );
  std::remove( path.c_str() );
}

TEST_CASE( "stats summarizes fabric and design" )
{
  auto const r = cli( { "stats", "--builtin", "fa_qdi" } );
  CHECK( r.code == 0 );
  CHECK( r.out.find( "fabric: 4x4" ) != std::string::npos );
  CHECK( r.out.find( "plbs: 16" ) != std::string::npos );
  CHECK( r.out.find( "image bytes: " + std::to_string( image_length( fabric_params{} ) ) ) !=
         std::string::npos );
}

TEST_CASE( "help and version are available" )
{
  auto const help = cli( { "--help" } );
  CHECK( help.code == 0 );
  for ( auto const* sub : { "check", "pack", "pnr", "bitstream", "sim", "stats" } )
    CHECK( help.out.find( sub ) != std::string::npos );

  auto const version = cli( { "--version" } );
  CHECK( version.code == 0 );
  CHECK( version.out.find( AFPGA_VERSION ) != std::string::npos );
}

TEST_CASE( "identical invocations produce identical output" )
{
  for ( auto const& args : std::vector<std::vector<std::string>>{
            { "pnr", "--builtin", "fa_qdi" },
            { "sim", "--builtin", "fa_micropipeline" },
            { "pack", "--builtin", "fa_qdi", "--json" } } )
  {
    auto const a = cli( args );
    auto const b = cli( args );
    CHECK( a.code == b.code );
    CHECK( a.out == b.out );
  }
}
