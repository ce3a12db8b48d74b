// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file flow.hpp
  \brief Composition of the implementation flow

  generate_config turns a packing, a placement and routes into a fabric
  configuration: LUT images via realize_le, interconnection-matrix
  selections from the packing's intra-PLB plan plus the placement's pin
  maps, switch-box and connection-box enables from the route arcs.  It
  also reports where module ports touch the fabric so the simulator can
  bind testbenches.  run_flow chains map, pack, place, route and
  configure for one netlist.
*/

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "arch.hpp"
#include "bitstream.hpp"
#include "mapper.hpp"
#include "netlist.hpp"
#include "pnr.hpp"
#include "sim.hpp"

namespace afpga
{

class flow_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct flow_result
{
  packing packed;
  placement placed;
  routes routed;
  fabric_config config;
  port_binding ports;
};

namespace detail
{

/*! \brief Row of a pin's enable bits inside its connection box frame. */
inline int cb_pin_row( fabric_params const& params, connection_box const& cb, int code )
{
  auto const codes = cb_pin_codes( params, cb );
  for ( std::size_t i = 0; i < codes.size(); ++i )
    if ( codes[i] == code )
      return int( i );
  return -1;
}

inline connection_box const& cb_facing( fabric const& f, int group, int plb )
{
  for ( auto const& cb : f.connection_boxes )
    if ( cb.group == group && cb.plb == plb )
      return cb;
  throw flow_error( "no connection box joins group " + f.group_name( group ) + " and PLB " +
                    std::to_string( plb ) );
}

inline int cb_index( fabric const& f, connection_box const& cb )
{
  return int( &cb - f.connection_boxes.data() );
}

/*! \brief Present-pair row of two groups meeting at a switch box. */
inline std::pair<int, int> sb_pair_row( fabric const& f, int group_a, int group_b )
{
  auto const [a1, a2] = f.group_endpoints( group_a );
  auto const [b1, b2] = f.group_endpoints( group_b );
  int const sb_id = ( a1 == b1 || a1 == b2 ) ? a1 : a2;
  if ( sb_id != b1 && sb_id != b2 )
    throw flow_error( "groups " + f.group_name( group_a ) + " and " + f.group_name( group_b ) +
                      " share no switch box" );
  auto const& sb = f.switch_boxes[sb_id];
  int local_a = -1, local_b = -1;
  for ( int dir = 0; dir < 4; ++dir )
  {
    if ( sb.incident[dir] == group_a )
      local_a = dir;
    if ( sb.incident[dir] == group_b )
      local_b = dir;
  }
  int row = 0;
  for ( auto const& [x, y] : sb_pair_order )
  {
    if ( sb.incident[x] < 0 || sb.incident[y] < 0 )
      continue;
    if ( ( x == local_a && y == local_b ) || ( x == local_b && y == local_a ) )
      return { sb_id, row };
    ++row;
  }
  throw flow_error( "pair lookup failed at switch box " + std::to_string( sb_id ) );
}

} // namespace detail

/*! \brief Builds the fabric configuration realizing a placed, routed
 *         packing, plus the port binding for simulation.
 */
inline std::pair<fabric_config, port_binding> generate_config( fabric const& f,
                                                               packing const& p,
                                                               placement const& pl,
                                                               routes const& r )
{
  fabric_config cfg = make_fabric_config( f.params );
  port_binding ports;
  auto const& n = p.source;

  std::vector<int> cluster_plb( p.clusters.size() );
  for ( std::size_t ci = 0; ci < p.clusters.size(); ++ci )
    cluster_plb[ci] = f.plb_id( pl.sites[ci].first, pl.sites[ci].second );

  // LUT images, delay codes and planned intra-PLB connections
  std::vector<std::set<int>> linked_sinks( p.clusters.size() );
  for ( auto const& link : p.im_plan )
  {
    cfg.plbs[cluster_plb[link.cluster]].im.connect( link.sink, link.src );
    linked_sinks[link.cluster].insert( link.sink.index );
  }
  for ( std::size_t ci = 0; ci < p.clusters.size(); ++ci )
  {
    auto const& c = p.clusters[ci];
    auto& plb = cfg.plbs[cluster_plb[ci]];
    for ( int l = 0; l < 2; ++l )
    {
      auto const& a = c.les[l];
      if ( !a.used() )
        continue;
      plb.le( l ) = realize_le( a, p.funcs );
      for ( std::size_t pos = 0; pos < a.input_nets.size(); ++pos )
      {
        auto const sink = im_sink::le_input( l, int( pos ) );
        if ( linked_sinks[ci].count( sink.index ) )
          continue;
        auto it = pl.input_pin[ci].find( a.input_nets[pos] );
        if ( it == pl.input_pin[ci].end() )
          throw flow_error( "cluster " + std::to_string( ci ) + " has no input pin for net '" +
                            a.input_nets[pos] + "'" );
        plb.im.connect( sink, im_source::plb_input( it->second ) );
      }
    }
    if ( c.pdel_gate >= 0 )
    {
      plb.pde.k = n.gates[c.pdel_gate].delay_code;
      if ( !linked_sinks[ci].count( im_sink::pde_in().index ) )
      {
        auto const& net = n.gates[c.pdel_gate].inputs[0];
        auto it = pl.input_pin[ci].find( net );
        if ( it == pl.input_pin[ci].end() )
          throw flow_error( "cluster " + std::to_string( ci ) +
                            " has no input pin for delay net '" + net + "'" );
        plb.im.connect( im_sink::pde_in(), im_source::plb_input( it->second ) );
      }
    }
    // output pins read the local producer
    for ( auto const& [net, pin] : pl.output_pin[ci] )
    {
      im_source src = im_source::const0();
      bool found = false;
      for ( int l = 0; l < 2 && !found; ++l )
      {
        auto const& a = c.les[l];
        for ( int slot = 0; slot < 3 && !found; ++slot )
        {
          if ( a.slot[slot] >= 0 && p.funcs[a.slot[slot]].output == net )
          {
            src = im_source::le_output( l, slot );
            found = true;
          }
        }
        if ( !found && a.v_slot >= 0 && p.funcs[a.v_slot].output == net )
        {
          src = im_source::le_output( l, 3 );
          found = true;
        }
      }
      if ( !found && c.pdel_gate >= 0 && n.gates[c.pdel_gate].output == net )
      {
        src = im_source::pde_out();
        found = true;
      }
      if ( !found )
        throw flow_error( "cluster " + std::to_string( ci ) + " does not produce net '" + net +
                          "'" );
      cfg.plbs[cluster_plb[ci]].im.connect( im_sink::plb_output( pin ), src );
    }
  }

  // switch-box and connection-box enables along every route tree
  auto const g = build_routing_graph( f );
  for ( auto const& tree : r.nets )
  {
    for ( auto const& [from, to] : tree.arcs )
    {
      auto const& nf = g.nodes[from];
      auto const& nt = g.nodes[to];
      if ( nf.kind == routing_graph::node_kind::output_pin )
      {
        auto const& cb = detail::cb_facing( f, nt.group, nf.plb );
        int const row = detail::cb_pin_row( f.params, cb, f.params.plb_inputs + nf.pin );
        if ( row < 0 )
          throw flow_error( "output pin " + std::to_string( nf.pin ) +
                            " not served by its connection box" );
        cfg.cb_bits[detail::cb_index( f, cb )].pin_enable[row][nt.track] = true;
      }
      else if ( nt.kind == routing_graph::node_kind::input_pin )
      {
        auto const& cb = detail::cb_facing( f, nf.group, nt.plb );
        int const row = detail::cb_pin_row( f.params, cb, nt.pin );
        if ( row < 0 )
          throw flow_error( "input pin " + std::to_string( nt.pin ) +
                            " not served by its connection box" );
        cfg.cb_bits[detail::cb_index( f, cb )].pin_enable[row][nf.track] = true;
      }
      else
      {
        auto const [sb_id, row] = detail::sb_pair_row( f, nf.group, nt.group );
        cfg.sb_bits[sb_id].pair_enable[row][nf.track] = true;
      }
    }
  }

  // where ports touch the fabric
  for ( auto const& port : n.ports )
  {
    if ( port.is_input )
    {
      // ports nothing consumes (environment acknowledges) still get an
      // entry, so the testbench can drive them in the fabric model
      std::vector<std::pair<int, int>> pins;
      for ( std::size_t ci = 0; ci < p.clusters.size(); ++ci )
      {
        auto it = pl.input_pin[ci].find( port.net );
        if ( it != pl.input_pin[ci].end() )
          pins.push_back( { cluster_plb[ci], it->second } );
      }
      ports.inputs[port.net] = std::move( pins );
    }
    else
    {
      for ( std::size_t ci = 0; ci < p.clusters.size(); ++ci )
      {
        auto it = pl.output_pin[ci].find( port.net );
        if ( it != pl.output_pin[ci].end() )
          ports.outputs[port.net] = { cluster_plb[ci], it->second };
      }
    }
  }

  return { std::move( cfg ), std::move( ports ) };
}

/*! \brief map → pack → place → route → configure for one netlist. */
inline flow_result run_flow( netlist const& n, fabric const& f, uint32_t seed )
{
  flow_result result;
  result.packed = pack( tech_map( n ), n );
  result.placed = place( result.packed, f, seed );
  result.routed = route( result.placed, f );
  std::tie( result.config, result.ports ) =
      generate_config( f, result.packed, result.placed, result.routed );
  return result;
}

} // namespace afpga
