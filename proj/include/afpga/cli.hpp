// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file cli.hpp
  \brief Command-line driver

  Subcommands compose the library: `check` validates a netlist, `pack`
  maps and packs it, `pnr` places and routes, `bitstream` writes the
  configuration image, `sim` simulates (fabric mode after a full flow by
  default, reference netlist mode with --model netlist), `stats`
  summarizes fabric and packing.  Designs come from a `.anet` file or
  `--builtin`.
  `--json` switches reports to a stable schema with the keys design,
  plbs_occupied, slots_used, filling_ratio, routed, hazards and verdict,
  each subcommand emitting the subset it computes.

  Exit codes: 0 success, 1 diagnostics or verdict failure, 2 usage
  error.  All output is deterministic for fixed flags.
*/

#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "afpga_version.hpp"
#include "flow.hpp"
#include "vcd.hpp"

namespace afpga
{

/*! \brief Everything a subcommand needs, assembled from flags. */
struct project_config
{
  fabric_params params;
  uint32_t seed = 1;
  std::string delays = "nominal";
  int trials = 1;
  int64_t t_max = 100000;
  std::string netlist_path;
  std::string builtin;
  std::string out_path;
  std::string vcd_path;
  bool json = false;
  std::string model = "fabric";
};

namespace detail
{

inline std::string percent( double ratio )
{
  char buf[32];
  std::snprintf( buf, sizeof buf, "%.2f%%", 100.0 * ratio );
  return buf;
}

inline netlist load_design( project_config const& cfg )
{
  if ( !cfg.builtin.empty() )
    return make_builtin( cfg.builtin );
  std::ifstream in( cfg.netlist_path );
  if ( !in )
    throw netlist_error( "cannot open '" + cfg.netlist_path + "'" );
  std::ostringstream text;
  text << in.rdbuf();
  return parse_netlist( text.str() );
}

} // namespace detail

/*! \brief Runs one subcommand; reports go to \p out, errors to \p err. */
inline int run_command( std::vector<std::string> const& args, std::ostream& out,
                        std::ostream& err )
{
  CLI::App app{ "asynchronous FPGA mapping, place and route, and simulation", "afpga" };
  app.set_version_flag( "--version", AFPGA_VERSION );
  app.require_subcommand( 1 );

  project_config cfg;
  std::function<int()> action;

  auto add_design = [&]( CLI::App* sub ) {
    sub->add_option( "netlist", cfg.netlist_path, "netlist file (.anet)" )
        ->check( CLI::ExistingFile );
    sub->add_option( "--builtin", cfg.builtin, "built-in design name" );
    sub->add_flag( "--json", cfg.json, "machine-readable report" );
  };
  auto add_fabric = [&]( CLI::App* sub ) {
    sub->add_option( "--rows", cfg.params.rows, "fabric rows" )->check( CLI::PositiveNumber );
    sub->add_option( "--cols", cfg.params.cols, "fabric columns" )
        ->check( CLI::PositiveNumber );
    sub->add_option( "--width", cfg.params.channel_width, "tracks per channel" )
        ->check( CLI::PositiveNumber );
    sub->add_option( "--seed", cfg.seed, "seed for placement and randomized delays" );
  };

  auto design_or_usage = [&]() -> netlist {
    if ( cfg.builtin.empty() && cfg.netlist_path.empty() )
      throw CLI::RequiredError( "netlist or --builtin" );
    if ( !cfg.builtin.empty() && !cfg.netlist_path.empty() )
      throw CLI::RequiresError( "netlist", "omitting --builtin" );
    return detail::load_design( cfg );
  };

  using ordered_json = nlohmann::ordered_json;

  // check ---------------------------------------------------------------
  auto* c_check = app.add_subcommand( "check", "validate a netlist" );
  add_design( c_check );
  c_check->callback( [&]() {
    action = [&]() {
      auto const n = design_or_usage();
      auto const diags = check_netlist( n );
      if ( cfg.json )
      {
        ordered_json j;
        j["design"] = n.name;
        j["verdict"] = diags.empty() ? "pass" : "fail";
        out << j.dump( 2 ) << "\n";
      }
      else
      {
        for ( auto const& d : diags )
          out << d.code << ": " << d.message << "\n";
        out << "check: " << ( diags.empty() ? "ok" : std::to_string( diags.size() ) + " issues" )
            << "\n";
      }
      return diags.empty() ? 0 : 1;
    };
  } );

  // pack ----------------------------------------------------------------
  auto* c_pack = app.add_subcommand( "pack", "map and pack into logic blocks" );
  add_design( c_pack );
  c_pack->callback( [&]() {
    action = [&]() {
      auto const n = design_or_usage();
      auto const p = pack( tech_map( n ), n );
      auto const diags = check_packing( p );
      if ( cfg.json )
      {
        ordered_json j;
        j["design"] = n.name;
        j["plbs_occupied"] = p.stats.occupied_plbs;
        j["slots_used"] = p.stats.used_slots;
        j["filling_ratio"] = filling_ratio( p );
        out << j.dump( 2 ) << "\n";
      }
      else
      {
        out << "design: " << n.name << "\n";
        out << "functions: " << p.funcs.size() << "\n";
        out << "plbs occupied: " << p.stats.occupied_plbs << "\n";
        out << "les occupied: " << p.stats.occupied_les << "\n";
        out << "slots used: " << p.stats.used_slots << "\n";
        out << "filling ratio: " << detail::percent( filling_ratio( p ) ) << "\n";
        for ( auto const& d : diags )
          out << d.code << ": " << d.message << "\n";
      }
      return diags.empty() ? 0 : 1;
    };
  } );

  // pnr -----------------------------------------------------------------
  auto* c_pnr = app.add_subcommand( "pnr", "place and route" );
  add_design( c_pnr );
  add_fabric( c_pnr );
  c_pnr->callback( [&]() {
    action = [&]() {
      auto const n = design_or_usage();
      auto const f = build_fabric( cfg.params );
      auto const p = pack( tech_map( n ), n );
      auto const pl = place( p, f, cfg.seed );
      auto const r = route( pl, f );
      auto const diags = check_routes( r, f );
      if ( cfg.json )
      {
        ordered_json j;
        j["design"] = n.name;
        j["plbs_occupied"] = p.stats.occupied_plbs;
        j["slots_used"] = p.stats.used_slots;
        j["filling_ratio"] = filling_ratio( p );
        j["routed"] = r.nets.size();
        out << j.dump( 2 ) << "\n";
      }
      else
      {
        out << "design: " << n.name << "\n";
        for ( std::size_t ci = 0; ci < pl.sites.size(); ++ci )
          out << "cluster " << ci << ": plb(" << pl.sites[ci].first << ","
              << pl.sites[ci].second << ")\n";
        out << route_report( r, f );
        out << "routed: " << r.nets.size() << " nets\n";
        for ( auto const& d : diags )
          out << d.code << ": " << d.message << "\n";
      }
      return diags.empty() ? 0 : 1;
    };
  } );

  // bitstream -----------------------------------------------------------
  auto* c_bit = app.add_subcommand( "bitstream", "generate the configuration image" );
  add_design( c_bit );
  add_fabric( c_bit );
  c_bit->add_option( "--out", cfg.out_path, "output image path (.afpg)" );
  c_bit->callback( [&]() {
    action = [&]() {
      auto const n = design_or_usage();
      auto const f = build_fabric( cfg.params );
      auto const fr = run_flow( n, f, cfg.seed );
      auto const image = encode( fr.config );
      std::string const path = cfg.out_path.empty() ? n.name + ".afpg" : cfg.out_path;
      std::ofstream os( path, std::ios::binary );
      if ( !os )
        throw bitstream_error( "cannot write '" + path + "'" );
      os.write( reinterpret_cast<char const*>( image.data() ),
                std::streamsize( image.size() ) );
      if ( cfg.json )
      {
        ordered_json j;
        j["design"] = n.name;
        out << j.dump( 2 ) << "\n";
      }
      else
      {
        out << "bitstream: " << path << " (" << image.size() << " bytes)\n";
      }
      return 0;
    };
  } );

  // sim -----------------------------------------------------------------
  auto* c_sim = app.add_subcommand( "sim", "simulate a design" );
  add_design( c_sim );
  add_fabric( c_sim );
  c_sim->add_option( "--delays", cfg.delays, "delay model" )
      ->check( CLI::IsMember( { "nominal", "random" } ) );
  c_sim->add_option( "--trials", cfg.trials, "randomized trials to compare against nominal" )
      ->check( CLI::PositiveNumber );
  c_sim->add_option( "--tmax", cfg.t_max, "simulation time limit" )
      ->check( CLI::PositiveNumber );
  c_sim->add_option( "--vcd", cfg.vcd_path, "write waveforms to this path" );
  c_sim->add_option( "--model", cfg.model, "simulate the routed fabric or the reference netlist" )
      ->check( CLI::IsMember( { "fabric", "netlist" } ) );
  c_sim->callback( [&]() {
    action = [&]() {
      auto const n = design_or_usage();
      auto tb = make_default_testbench( n );
      tb.timeout = uint64_t( cfg.t_max );

      sim_model model;
      if ( cfg.model == "netlist" )
      {
        model = elaborate_netlist( n );
      }
      else
      {
        auto const f = build_fabric( cfg.params );
        auto const fr = run_flow( n, f, cfg.seed );
        model = elaborate_fabric( f, fr.config, fr.routed, fr.ports );
      }

      bool const robustness = cfg.delays == "random" && cfg.trials > 1;
      trace t = run( model, tb,
                     cfg.delays == "random" && !robustness ? delay_model::random( cfg.seed )
                                                           : delay_model::nominal() );
      auto const tokens = extract_tokens( t, tb.channels );
      robustness_verdict verdict;
      if ( robustness )
        verdict = qdi_robustness( model, tb, cfg.trials, cfg.seed );
      else
        verdict.pass = !t.timed_out && tokens.diags.empty();

      if ( !cfg.vcd_path.empty() )
      {
        std::ofstream os( cfg.vcd_path );
        if ( !os )
          throw sim_error( "cannot write '" + cfg.vcd_path + "'" );
        os << write_vcd( t, n.name );
      }

      if ( cfg.json )
      {
        ordered_json j;
        j["design"] = n.name;
        j["hazards"] = t.hazards.size();
        j["verdict"] = verdict.pass ? "pass" : "fail";
        out << j.dump( 2 ) << "\n";
      }
      else
      {
        out << "design: " << n.name << "\n";
        out << "mode: " << cfg.model << "\n";
        for ( auto const& seq : tokens.sequences )
        {
          out << "tokens " << seq.channel << ":";
          for ( auto v : seq.values )
            out << " " << v;
          out << "\n";
        }
        for ( auto const& d : tokens.diags )
          out << d.code << ": " << d.message << "\n";
        if ( t.timed_out )
          out << "timeout at " << t.end_time << "\n";
        out << "hazards: " << t.hazards.size() << "\n";
        if ( robustness )
        {
          out << "trials: " << cfg.trials << "\n";
          out << "verdict: " << ( verdict.pass ? "pass" : "fail" ) << "\n";
          if ( !verdict.pass )
            out << verdict.message << "\n";
        }
      }
      return verdict.pass ? 0 : 1;
    };
  } );

  // stats ---------------------------------------------------------------
  auto* c_stats = app.add_subcommand( "stats", "fabric and packing summary" );
  add_design( c_stats );
  add_fabric( c_stats );
  c_stats->callback( [&]() {
    action = [&]() {
      auto const n = design_or_usage();
      auto const f = build_fabric( cfg.params );
      auto const g = build_routing_graph( f );
      auto const p = pack( tech_map( n ), n );
      if ( cfg.json )
      {
        ordered_json j;
        j["design"] = n.name;
        j["plbs_occupied"] = p.stats.occupied_plbs;
        j["slots_used"] = p.stats.used_slots;
        j["filling_ratio"] = filling_ratio( p );
        out << j.dump( 2 ) << "\n";
      }
      else
      {
        out << "design: " << n.name << "\n";
        out << "fabric: " << cfg.params.rows << "x" << cfg.params.cols << ", "
            << cfg.params.channel_width << " tracks per channel\n";
        out << "plbs: " << f.num_plbs() << "\n";
        out << "segment groups: " << f.seg_groups.size() << "\n";
        out << "switch boxes: " << f.switch_boxes.size() << "\n";
        out << "connection boxes: " << f.connection_boxes.size() << "\n";
        out << "routing nodes: " << g.nodes.size() << "\n";
        out << "routing edges: " << g.num_edges() << "\n";
        out << "image bytes: " << image_length( cfg.params ) << "\n";
        out << "plbs occupied: " << p.stats.occupied_plbs << "\n";
        out << "slots used: " << p.stats.used_slots << "\n";
        out << "filling ratio: " << detail::percent( filling_ratio( p ) ) << "\n";
      }
      return 0;
    };
  } );

  std::vector<std::string> reversed( args.rbegin(), args.rend() );
  try
  {
    app.parse( reversed );
  }
  catch ( CLI::CallForHelp const& )
  {
    out << app.help();
    return 0;
  }
  catch ( CLI::CallForVersion const& )
  {
    out << AFPGA_VERSION << "\n";
    return 0;
  }
  catch ( CLI::ParseError const& e )
  {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try
  {
    return action ? action() : 2;
  }
  catch ( CLI::ParseError const& e )
  {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }
  catch ( std::exception const& e )
  {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int run_command( int argc, char** argv )
{
  return run_command( std::vector<std::string>( argv + 1, argv + argc ), std::cout,
                      std::cerr );
}

} // namespace afpga
