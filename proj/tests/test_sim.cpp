// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <afpga/flow.hpp>
#include <afpga/sim.hpp>
#include <afpga/vcd.hpp>

#include <random>
#include <sstream>

using namespace afpga;

namespace
{

std::vector<uint64_t> const& tokens_for( extraction_result const& r, std::string const& name )
{
  for ( auto const& s : r.sequences )
    if ( s.channel == name )
      return s.values;
  FAIL( "no channel " + name );
  return r.sequences.front().values;
}

/* addition checks for the full-adder builtins */
std::vector<uint64_t> const gold_sum = { 0, 1, 1, 0, 1, 0, 0, 1 };
std::vector<uint64_t> const gold_cout = { 0, 0, 0, 1, 0, 1, 1, 1 };
std::vector<uint64_t> const gold_bundled = { 0, 1, 1, 2, 1, 2, 2, 3 };

} // namespace

TEST_CASE( "muller gate keeps state between matching inputs" )
{
  auto const m = elaborate_netlist( make_builtin( "c_element" ) );
  testbench tb;
  tb.ports = make_builtin( "c_element" ).ports;
  tb.waveform = { { 5, "a", true }, { 10, "b", true }, { 20, "a", false }, { 25, "b", false } };
  auto const t = run( m, tb, delay_model::nominal() );

  CHECK( !value_at( t, "y", 11 ) );
  CHECK( value_at( t, "y", 12 ) ); // both high at 10, gate delay 2
  CHECK( value_at( t, "y", 26 ) ); // one low input holds the state
  CHECK( !value_at( t, "y", 27 ) );
  CHECK( !t.timed_out );
}

TEST_CASE( "muller gate tracks its next-state relation over random stimuli" )
{
  auto const m = elaborate_netlist( make_builtin( "c_element" ) );
  std::mt19937 rng( 99 );
  testbench tb;
  tb.ports = make_builtin( "c_element" ).ports;
  bool a = false, b = false;
  uint64_t at = 5;
  std::vector<std::pair<uint64_t, bool>> expect; // (time to probe, y)
  bool y = false;
  for ( int step = 0; step < 300; ++step )
  {
    if ( rng() & 1 )
    {
      a = !a;
      tb.waveform.push_back( { at, "a", a } );
    }
    else
    {
      b = !b;
      tb.waveform.push_back( { at, "b", b } );
    }
    y = ( a && b ) || ( y && ( a || b ) );
    expect.push_back( { at + 4, y } );
    at += 5;
  }
  auto const t = run( m, tb, delay_model::nominal() );
  for ( auto const& [probe, want] : expect )
    CHECK( value_at( t, "y", probe ) == want );
}

TEST_CASE( "short pulses are absorbed and recorded" )
{
  auto const n = parse_netlist( "module m\nport in a\nport out y\ncell g1 BUF a -> y\nend\n" );
  auto const m = elaborate_netlist( n );
  testbench tb;
  tb.ports = n.ports;
  tb.waveform = { { 5, "a", true }, { 6, "a", false } };
  auto const t = run( m, tb, delay_model::nominal() );
  REQUIRE( t.hazards.size() == 1 );
  CHECK( t.hazards[0].signal == "y" );
  CHECK( t.hazards[0].kind == "absorbed-pulse" );
  CHECK( !value_at( t, "y", 1000 ) );

  // a pulse wider than the gate delay goes through
  testbench wide = tb;
  wide.waveform = { { 5, "a", true }, { 8, "a", false } };
  auto const t2 = run( m, wide, delay_model::nominal() );
  CHECK( t2.hazards.empty() );
  CHECK( value_at( t2, "y", 7 ) );
  CHECK( !value_at( t2, "y", 10 ) );
}

TEST_CASE( "unbalanced delay paths glitch and matched ones do not" )
{
  auto const skewed = make_builtin( "glitch_demo" );
  auto const tb = make_default_testbench( skewed );
  auto const t = run( elaborate_netlist( skewed ), tb, delay_model::nominal() );
  CHECK( !t.hazards.empty() );

  auto const matched = make_builtin( "glitch_demo", { .delay_code = 4 } );
  auto const t2 = run( elaborate_netlist( matched ), make_default_testbench( matched ),
                       delay_model::nominal() );
  CHECK( t2.hazards.empty() );
}

TEST_CASE( "dual-rail adder computes addition at the netlist level" )
{
  auto const n = make_builtin( "fa_qdi" );
  auto const tb = make_default_testbench( n );
  auto const t = run( elaborate_netlist( n ), tb, delay_model::nominal() );
  REQUIRE( !t.timed_out );
  CHECK( t.hazards.empty() );
  auto const tokens = extract_tokens( t, tb.channels );
  CHECK( tokens.diags.empty() );
  CHECK( tokens_for( tokens, "sum" ) == gold_sum );
  CHECK( tokens_for( tokens, "cout" ) == gold_cout );
}

TEST_CASE( "bundled-data adder computes addition with enough margin" )
{
  auto const n = make_builtin( "fa_micropipeline" );
  auto const tb = make_default_testbench( n );
  auto const t = run( elaborate_netlist( n ), tb, delay_model::nominal() );
  REQUIRE( !t.timed_out );
  auto const tokens = extract_tokens( t, tb.channels );
  CHECK( tokens.diags.empty() );
  CHECK( tokens_for( tokens, "out_ch" ) == gold_bundled );
}

TEST_CASE( "packed model behaves like the netlist model" )
{
  for ( auto const& name : { "fa_qdi", "fa_micropipeline" } )
  {
    INFO( "builtin " << name );
    auto const n = make_builtin( name );
    auto const tb = make_default_testbench( n );
    auto const p = pack( tech_map( n ), n );
    auto const t_net = run( elaborate_netlist( n ), tb, delay_model::nominal() );
    auto const t_pack = run( elaborate_packing( p ), tb, delay_model::nominal() );
    auto const a = extract_tokens( t_net, tb.channels );
    auto const b = extract_tokens( t_pack, tb.channels );
    REQUIRE( a.sequences.size() == b.sequences.size() );
    for ( std::size_t i = 0; i < a.sequences.size(); ++i )
      CHECK( a.sequences[i] == b.sequences[i] );
  }
}

TEST_CASE( "fabric model of the dual-rail adder matches the netlist" )
{
  auto const n = make_builtin( "fa_qdi" );
  auto const f = build_fabric( {} );
  auto const flow = run_flow( n, f, 1 );
  auto const m = elaborate_fabric( f, flow.config, flow.routed, flow.ports );
  auto const tb = make_default_testbench( n );
  auto const t = run( m, tb, delay_model::nominal() );
  REQUIRE( !t.timed_out );
  CHECK( t.hazards.empty() );
  auto const tokens = extract_tokens( t, tb.channels );
  CHECK( tokens.diags.empty() );
  CHECK( tokens_for( tokens, "sum" ) == gold_sum );
  CHECK( tokens_for( tokens, "cout" ) == gold_cout );
}

TEST_CASE( "randomized delays keep the dual-rail adder correct" )
{
  auto const n = make_builtin( "fa_qdi" );
  auto const tb = make_default_testbench( n );
  auto const verdict = qdi_robustness( elaborate_netlist( n ), tb, 10, 2026 );
  CHECK( verdict.pass );
  CHECK( verdict.failing_trial == -1 );
}

TEST_CASE( "randomized delays break the bundled-data adder without margin" )
{
  auto const n = make_builtin( "fa_micropipeline", { .delay_code = 0 } );
  auto const tb = make_default_testbench( n );
  auto const verdict = qdi_robustness( elaborate_netlist( n ), tb, 10, 2026 );
  CHECK( !verdict.pass );
  CHECK( verdict.failing_trial >= 0 );
  CHECK( !verdict.message.empty() );
}

TEST_CASE( "traces are reproducible per seed" )
{
  auto const n = make_builtin( "fa_qdi" );
  auto const m = elaborate_netlist( n );
  auto const tb = make_default_testbench( n );
  auto const a = run( m, tb, delay_model::random( 5 ) );
  auto const b = run( m, tb, delay_model::random( 5 ) );
  REQUIRE( a.changes.size() == b.changes.size() );
  for ( std::size_t i = 0; i < a.changes.size(); ++i )
  {
    CHECK( a.changes[i].time == b.changes[i].time );
    CHECK( a.changes[i].signal == b.changes[i].signal );
    CHECK( a.changes[i].value == b.changes[i].value );
  }
  auto const c = run( m, tb, delay_model::random( 6 ) );
  bool same = a.changes.size() == c.changes.size();
  for ( std::size_t i = 0; same && i < a.changes.size(); ++i )
    same = a.changes[i].time == c.changes[i].time && a.changes[i].signal == c.changes[i].signal;
  CHECK( !same );
}

TEST_CASE( "a too-small horizon reports a timeout" )
{
  auto const n = make_builtin( "fa_qdi" );
  auto const tb = make_default_testbench( n );
  auto const t = run( elaborate_netlist( n ), tb, delay_model::nominal(), 5 );
  CHECK( t.timed_out );
  CHECK( t.end_time <= 5 );
}

TEST_CASE( "extraction flags protocol violations" )
{
  std::vector<channel> chans( 1 );
  chans[0].name = "s";
  chans[0].kind = channel_kind::dual_rail;
  chans[0].rail_t = "s_t";
  chans[0].rail_f = "s_f";
  chans[0].ack = "ack";

  trace t;
  t.signals = { "s_t", "s_f" };
  t.initial = { false, false };
  t.changes = { { 5, 0, 0, true },   // token 1
                { 10, 1, 0, false }, // spacer
                { 15, 2, 1, true },  // token 0
                { 20, 3, 0, true } }; // both rails high
  auto const r = extract_tokens( t, chans );
  REQUIRE( r.sequences.size() == 1 );
  CHECK( r.sequences[0].values == std::vector<uint64_t>{ 1, 0 } );
  REQUIRE( r.diags.size() == 1 );
  CHECK( r.diags[0].code == "protocol-violation" );

  trace t2;
  t2.signals = { "s_t", "s_f" };
  t2.initial = { false, false };
  t2.changes = { { 5, 0, 0, true },    // token 1
                 { 10, 1, 0, false },  // spacer
                 { 10, 2, 1, true } }; // new token in the same batch: no spacer seen
  auto const r2 = extract_tokens( t2, chans );
  REQUIRE( r2.diags.size() == 1 );
  CHECK( r2.diags[0].code == "rtz-violation" );
  CHECK( r2.sequences[0].values == std::vector<uint64_t>{ 1 } );
}

TEST_CASE( "fabric configurations with an instant loop are rejected" )
{
  fabric_params p;
  p.rows = p.cols = 1;
  p.channel_width = 1;
  auto const f = build_fabric( p );
  auto cfg = make_fabric_config( f.params );
  cfg.plbs[0].im.connect( im_sink::pde_in(), im_source::pde_out() );
  cfg.plbs[0].pde.k = 0;
  CHECK_THROWS_MATCHES( elaborate_fabric( f, cfg, {}, {} ), sim_error,
                        Catch::Matchers::MessageMatches(
                            Catch::Matchers::ContainsSubstring( "zero-delay-cycle" ) ) );
  cfg.plbs[0].pde.k = 1;
  CHECK_NOTHROW( elaborate_fabric( f, cfg, {}, {} ) );
}

TEST_CASE( "waveform dump lists every signal and transition" )
{
  auto const n = make_builtin( "c_element" );
  auto const m = elaborate_netlist( n );
  testbench tb;
  tb.ports = n.ports;
  tb.waveform = { { 5, "a", true }, { 10, "b", true } };
  auto const t = run( m, tb, delay_model::nominal() );
  auto const vcd = write_vcd( t, "dut" );

  CHECK( vcd.find( "$timescale 1ns $end" ) != std::string::npos );
  CHECK( vcd.find( "$scope module dut $end" ) != std::string::npos );
  CHECK( vcd.find( "$enddefinitions $end" ) != std::string::npos );
  CHECK( vcd.find( "$dumpvars" ) != std::string::npos );
  for ( auto const& sig : t.signals )
    CHECK( vcd.find( " " + sig + " $end" ) != std::string::npos );

  std::size_t sections = 0;
  std::set<std::string> times;
  std::istringstream is( vcd );
  std::string line;
  while ( std::getline( is, line ) )
    if ( !line.empty() && line[0] == '#' )
    {
      ++sections;
      CHECK( times.insert( line ).second );
    }
  std::set<uint64_t> distinct;
  for ( auto const& c : t.changes )
    distinct.insert( c.time );
  CHECK( sections == distinct.size() );
}

TEST_CASE( "waveform identifiers stay unique past the single-character range" )
{
  trace t;
  for ( int i = 0; i < 200; ++i )
  {
    t.signals.push_back( "sig" + std::to_string( i ) );
    t.initial.push_back( false );
  }
  auto const vcd = write_vcd( t );
  std::set<std::string> ids;
  std::istringstream is( vcd );
  std::string line;
  bool two_char = false;
  while ( std::getline( is, line ) )
  {
    if ( line.rfind( "$var wire 1 ", 0 ) != 0 )
      continue;
    auto const rest = line.substr( 12 );
    auto const id = rest.substr( 0, rest.find( ' ' ) );
    CHECK( ids.insert( id ).second );
    two_char = two_char || id.size() > 1;
  }
  CHECK( ids.size() == 200 );
  CHECK( two_char );
}
