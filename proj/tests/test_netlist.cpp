// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <afpga/netlist.hpp>

#include <map>
#include <set>

using namespace afpga;

TEST_CASE( "parse a one-gate module" )
{
  auto const n = parse_netlist( "module m\n"
                                "port in a\n"
                                "port out y\n"
                                "cell g1 INV a -> y\n"
                                "end\n" );
  CHECK( n.name == "m" );
  REQUIRE( n.gates.size() == 1 );
  CHECK( n.gates[0].name == "g1" );
  CHECK( n.gates[0].kind == cell_kind::inv );
  CHECK( n.gates[0].inputs == std::vector<std::string>{ "a" } );
  CHECK( n.gates[0].output == "y" );
  REQUIRE( n.ports.size() == 2 );
  CHECK( n.ports[0].is_input );
  CHECK( !n.ports[1].is_input );
}

TEST_CASE( "unknown cell kind names the line" )
{
  try
  {
    parse_netlist( "module m\nport in a\nport out y\ncell g1 FOO a -> y\nend\n" );
    FAIL( "expected a parse error" );
  }
  catch ( parse_error const& e )
  {
    CHECK( e.line() == 4 );
    CHECK( std::string( e.what() ).find( "FOO" ) != std::string::npos );
  }
}

TEST_CASE( "structural parse errors" )
{
  CHECK_THROWS_AS( parse_netlist( "port in a\n" ), parse_error );
  CHECK_THROWS_AS( parse_netlist( "module m\nmodule n\nend\n" ), parse_error );
  CHECK_THROWS_AS( parse_netlist( "module m\n" ), parse_error );
  CHECK_THROWS_AS( parse_netlist( "module m\nend\ncell g1 BUF a -> y\n" ), parse_error );
  CHECK_THROWS_AS( parse_netlist( "module m\nport sideways a\nend\n" ), parse_error );
  CHECK_THROWS_AS( parse_netlist( "module m\ncell g1 PDEL(16) a -> y\nend\n" ), parse_error );
  CHECK_THROWS_AS( parse_netlist( "module m\ncell g1 PDEL(x) a -> y\nend\n" ), parse_error );
}

TEST_CASE( "comments and delay cells parse" )
{
  auto const n = parse_netlist( "# leading comment\n"
                                "module m\n"
                                "port in a  # trailing comment\n"
                                "port out y\n"
                                "cell d1 PDEL(15) a -> y\n"
                                "end\n" );
  REQUIRE( n.gates.size() == 1 );
  CHECK( n.gates[0].kind == cell_kind::pdel );
  CHECK( n.gates[0].delay_code == 15 );
}

TEST_CASE( "emit and reparse every builtin" )
{
  for ( auto const& name : builtin_names() )
  {
    auto const n = make_builtin( name );
    auto const text = emit_netlist( n );
    CHECK( text.ends_with( "end\n" ) );
    auto const back = parse_netlist( text );
    CHECK( back == n );
    // canonical form is a fixed point
    CHECK( emit_netlist( back ) == text );
  }
}

TEST_CASE( "multiple drivers diagnosed" )
{
  auto const n = parse_netlist( "module m\n"
                                "port in a\n"
                                "port out y\n"
                                "cell g1 BUF a -> y\n"
                                "cell g2 INV a -> y\n"
                                "end\n" );
  auto const diags = check_netlist( n );
  REQUIRE( !diags.empty() );
  CHECK( diags.front().code == "multiple-drivers" );
}

TEST_CASE( "stateless loop diagnosed" )
{
  auto const n = parse_netlist( "module m\n"
                                "cell g1 INV x2 -> x1\n"
                                "cell g2 INV x1 -> x2\n"
                                "end\n" );
  bool found = false;
  for ( auto const& d : check_netlist( n ) )
    found = found || d.code == "stateless-cycle";
  CHECK( found );
}

TEST_CASE( "delay cells count as stateless for cycles" )
{
  auto const n = parse_netlist( "module m\n"
                                "cell g1 PDEL(3) x2 -> x1\n"
                                "cell g2 BUF x1 -> x2\n"
                                "end\n" );
  bool found = false;
  for ( auto const& d : check_netlist( n ) )
    found = found || d.code == "stateless-cycle";
  CHECK( found );
}

TEST_CASE( "muller feedback is not a cycle error" )
{
  auto const n = parse_netlist( "module m\n"
                                "port in a\n"
                                "port out y\n"
                                "cell g1 C2 a y -> y\n"
                                "end\n" );
  for ( auto const& d : check_netlist( n ) )
    CHECK( d.code != "stateless-cycle" );
}

TEST_CASE( "arity and reference checks" )
{
  auto n = parse_netlist( "module m\nport in a\nport out y\ncell g1 AND2 a -> y\nend\n" );
  auto diags = check_netlist( n );
  REQUIRE( !diags.empty() );
  CHECK( diags.front().code == "arity-mismatch" );

  n = parse_netlist( "module m\nport in a\nport out y\ncell g1 AND2 a q -> y\nend\n" );
  bool dangling = false;
  for ( auto const& d : check_netlist( n ) )
    dangling = dangling || d.code == "dangling-input";
  CHECK( dangling );

  n = parse_netlist( "module m\nport out y\nend\n" );
  bool undriven = false;
  for ( auto const& d : check_netlist( n ) )
    undriven = undriven || d.code == "undriven-port";
  CHECK( undriven );

  n = parse_netlist( "module m\nport in a\nport out y\n"
                     "cell g1 BUF a -> y\ncell g1 INV a -> z\nend\n" );
  bool dup = false;
  for ( auto const& d : check_netlist( n ) )
    dup = dup || d.code == "duplicate-cell";
  CHECK( dup );

  n = parse_netlist( "module m\nport in a\nport out y\ncell g1 BUF a -> y\n"
                     "channel dualrail c a q ack\nend\n" );
  bool chan = false;
  for ( auto const& d : check_netlist( n ) )
    chan = chan || d.code == "channel-net-not-port";
  CHECK( chan );
}

TEST_CASE( "builtin census" )
{
  auto const qdi = make_builtin( "fa_qdi" );
  REQUIRE( qdi.gates.size() == 12 );
  int c3 = 0, or4 = 0;
  for ( auto const& g : qdi.gates )
  {
    c3 += ( g.kind == cell_kind::c3 );
    or4 += ( g.kind == cell_kind::or4 );
  }
  CHECK( c3 == 8 );
  CHECK( or4 == 4 );
  REQUIRE( qdi.channels.size() == 5 );
  int in_ch = 0, out_ch = 0;
  for ( auto const& c : qdi.channels )
  {
    REQUIRE( c.kind == channel_kind::dual_rail );
    ( qdi.is_input_port( c.rail_t ) ? in_ch : out_ch )++;
  }
  CHECK( in_ch == 3 );
  CHECK( out_ch == 2 );

  auto const mp = make_builtin( "fa_micropipeline" );
  REQUIRE( mp.gates.size() == 4 );
  int logic = 0, pdel = 0;
  for ( auto const& g : mp.gates )
    ( g.kind == cell_kind::pdel ? pdel : logic )++;
  CHECK( logic == 3 );
  CHECK( pdel == 1 );
  for ( auto const& g : mp.gates )
    if ( g.kind == cell_kind::pdel )
      CHECK( g.delay_code == 8 );
  REQUIRE( mp.channels.size() == 2 );
  CHECK( mp.channels[0].kind == channel_kind::bundled );
  CHECK( mp.channels[0].data == std::vector<std::string>{ "a", "b", "cin" } );

  auto const ce = make_builtin( "c_element" );
  REQUIRE( ce.gates.size() == 1 );
  CHECK( ce.gates[0].kind == cell_kind::c2 );

  auto const gd = make_builtin( "glitch_demo" );
  bool has_xor = false;
  for ( auto const& g : gd.gates )
    has_xor = has_xor || g.kind == cell_kind::xor2;
  CHECK( has_xor );
}

TEST_CASE( "unknown builtin" )
{
  CHECK_THROWS_MATCHES( make_builtin( "nope" ), netlist_error,
                        Catch::Matchers::MessageMatches(
                            Catch::Matchers::ContainsSubstring( "unknown-builtin" ) ) );
  CHECK_THROWS_AS( make_builtin( "fa_micropipeline", { 16 } ), netlist_error );
}

TEST_CASE( "builtins pass the checker" )
{
  for ( auto const& name : builtin_names() )
    CHECK( check_netlist( make_builtin( name ) ).empty() );
}

TEST_CASE( "dual-rail adder computes addition in steady state" )
{
  auto const n = make_builtin( "fa_qdi" );
  for ( int v = 0; v < 8; ++v )
  {
    bool const a = v & 1, b = ( v >> 1 ) & 1, c = ( v >> 2 ) & 1;
    // steady-state values with rails held at the operand encoding;
    // a C3 settles at the AND of its inputs when they rose monotonically
    std::map<std::string, bool> val = {
        { "a_t", a },   { "a_f", !a },  { "b_t", b },     { "b_f", !b },
        { "cin_t", c }, { "cin_f", !c } };
    for ( auto const& g : n.gates )
    {
      bool out;
      if ( g.kind == cell_kind::c3 )
        out = val.at( g.inputs[0] ) && val.at( g.inputs[1] ) && val.at( g.inputs[2] );
      else
        out = val.at( g.inputs[0] ) || val.at( g.inputs[1] ) || val.at( g.inputs[2] ) ||
              val.at( g.inputs[3] );
      val[g.output] = out;
    }
    bool const sum = a ^ b ^ c;
    bool const maj = ( a && b ) || ( b && c ) || ( a && c );
    CHECK( val.at( "sum_t" ) == sum );
    CHECK( val.at( "sum_f" ) == !sum );
    CHECK( val.at( "cout_t" ) == maj );
    CHECK( val.at( "cout_f" ) == !maj );
    // exactly one minterm fires
    int fired = 0;
    for ( auto const& g : n.gates )
      fired += ( g.kind == cell_kind::c3 && val.at( g.output ) );
    CHECK( fired == 1 );
  }
}

TEST_CASE( "cell kind metadata" )
{
  CHECK( kind_info( cell_kind::c2 ).stateful );
  CHECK( kind_info( cell_kind::c3 ).stateful );
  CHECK( !kind_info( cell_kind::xor2 ).stateful );
  CHECK( kind_info( cell_kind::maj3 ).arity == 3 );
  CHECK( kind_info( cell_kind::or4 ).arity == 4 );
  CHECK( kind_info( cell_kind::pdel ).arity == 1 );
  CHECK( std::string( kind_info( cell_kind::buf ).name ) == "BUF" );
}

TEST_CASE( "stateless evaluation oracle" )
{
  CHECK( eval_stateless( cell_kind::xor2, { true, true } ) == false );
  CHECK( eval_stateless( cell_kind::maj3, { true, false, true } ) == true );
  CHECK( eval_stateless( cell_kind::or4, { false, false, false, true } ) == true );
  CHECK( eval_stateless( cell_kind::inv, { false } ) == true );
  CHECK( eval_muller( { true, true }, false ) == true );
  CHECK( eval_muller( { true, false }, true ) == true );
  CHECK( eval_muller( { false, false }, true ) == false );
}
