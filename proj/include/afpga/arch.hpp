// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file arch.hpp
  \brief Island-style fabric topology and routing-resource graph

  The fabric is a rows x cols grid of programmable logic blocks (PLBs)
  embedded in a routing network of unit-length channel wires, switch
  boxes at the grid corners and connection boxes along the channels.
*/

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace afpga
{

class arch_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/*! \brief Grid and channel dimensions of a fabric.
 *
 * Pins are distributed round-robin over the four PLB sides, so both pin
 * counts must be divisible by 4.  Defaults give 3 inputs and 2 outputs
 * per side.
 */
struct fabric_params
{
  int rows = 4;
  int cols = 4;
  int channel_width = 8;
  int plb_inputs = 12;
  int plb_outputs = 8;

  bool operator==( fabric_params const& ) const = default;

  void validate() const
  {
    if ( rows < 1 || cols < 1 )
      throw arch_error( "invalid-params: grid must be at least 1x1" );
    if ( channel_width < 1 )
      throw arch_error( "invalid-params: channel width must be at least 1" );
    if ( plb_inputs < 4 || plb_inputs % 4 != 0 )
      throw arch_error( "invalid-params: plb_inputs must be a positive multiple of 4" );
    if ( plb_outputs < 4 || plb_outputs % 4 != 0 )
      throw arch_error( "invalid-params: plb_outputs must be a positive multiple of 4" );
  }
};

enum class side : uint8_t
{
  north = 0,
  east = 1,
  south = 2,
  west = 3
};

inline char side_letter( side s )
{
  switch ( s )
  {
  case side::north: return 'n';
  case side::east: return 'e';
  case side::south: return 's';
  default: return 'w';
  }
}

/* Round-robin pin distribution: pin i sits on side i % 4 at position i / 4. */
inline side pin_side( int pin ) { return side( pin % 4 ); }
inline int pin_side_pos( int pin ) { return pin / 4; }

/*! \brief One group of channel_width parallel wires between two switch boxes.
 *
 * Horizontal groups: channel y (0..rows, channel y runs south of PLB row y),
 * position x (0..cols-1).  Vertical groups: channel x (0..cols, channel x
 * runs west of PLB column x), position y (0..rows-1).
 */
struct seg_group
{
  bool horizontal;
  int channel;
  int pos;

  bool operator==( seg_group const& ) const = default;
};

/*! \brief Switch box at grid corner (row, col); row in 0..rows, col in 0..cols.
 *
 * incident[] holds the adjacent segment-group id per local direction
 * (0 = west horizontal, 1 = east horizontal, 2 = south vertical,
 * 3 = north vertical), or -1 where the fabric edge cuts it off.
 */
struct switch_box
{
  int row;
  int col;
  std::array<int, 4> incident;

  int degree() const
  {
    int d = 0;
    for ( int g : incident )
      d += ( g >= 0 );
    return d;
  }
};

/* Canonical order of switch-box pair connections; a pair is present when
 * both local directions have an incident group.  The disjoint pattern
 * connects track i only to track i across every present pair. */
inline constexpr std::array<std::pair<int, int>, 6> sb_pair_order = {
    { { 0, 1 }, { 0, 2 }, { 0, 3 }, { 1, 2 }, { 1, 3 }, { 2, 3 } } };

/*! \brief Connection box: one per (segment group, channel side).
 *
 * Every group carries two boxes, one per facing; a facing that looks off
 * the fabric edge has no PLB (plb == -1) and no pins.  For a horizontal
 * group, facing_high looks at the PLB row above the channel; for a
 * vertical group, at the PLB column east of it.
 */
struct connection_box
{
  int group;
  bool facing_high;
  int plb = -1;
  side plb_side = side::north;
};

struct fabric
{
  fabric_params params;
  std::vector<seg_group> seg_groups;
  std::vector<switch_box> switch_boxes;
  std::vector<connection_box> connection_boxes;

  int num_plbs() const { return params.rows * params.cols; }
  int plb_id( int row, int col ) const { return row * params.cols + col; }
  int plb_row( int id ) const { return id / params.cols; }
  int plb_col( int id ) const { return id % params.cols; }

  int num_h_groups() const { return ( params.rows + 1 ) * params.cols; }
  int num_v_groups() const { return ( params.cols + 1 ) * params.rows; }
  int h_group( int channel, int pos ) const { return channel * params.cols + pos; }
  int v_group( int channel, int pos ) const
  {
    return num_h_groups() + channel * params.rows + pos;
  }

  int switch_box_id( int row, int col ) const { return row * ( params.cols + 1 ) + col; }

  /*! \brief Segment group adjacent to the given PLB side. */
  int group_at( int row, int col, side s ) const
  {
    switch ( s )
    {
    case side::north: return h_group( row + 1, col );
    case side::south: return h_group( row, col );
    case side::west: return v_group( col, row );
    default: return v_group( col + 1, row );
    }
  }

  /*! \brief The two switch boxes a segment group spans. */
  std::pair<int, int> group_endpoints( int group ) const
  {
    auto const& g = seg_groups[group];
    if ( g.horizontal )
      return { switch_box_id( g.channel, g.pos ), switch_box_id( g.channel, g.pos + 1 ) };
    return { switch_box_id( g.pos, g.channel ), switch_box_id( g.pos + 1, g.channel ) };
  }

  std::string group_name( int group ) const
  {
    auto const& g = seg_groups[group];
    return ( g.horizontal ? "h" : "v" ) + std::to_string( g.channel ) + "_" + std::to_string( g.pos );
  }
};

/*! \brief Enumerates the full fabric for the given parameters.
 *
 * Identifier assignment is a pure function of the parameters: PLBs
 * row-major, horizontal groups before vertical groups (channel-major),
 * switch boxes row-major, connection boxes group-major with the
 * low-facing box first.
 */
inline fabric build_fabric( fabric_params const& params )
{
  params.validate();

  fabric f;
  f.params = params;

  for ( int y = 0; y <= params.rows; ++y )
    for ( int x = 0; x < params.cols; ++x )
      f.seg_groups.push_back( { true, y, x } );
  for ( int x = 0; x <= params.cols; ++x )
    for ( int y = 0; y < params.rows; ++y )
      f.seg_groups.push_back( { false, x, y } );

  for ( int r = 0; r <= params.rows; ++r )
  {
    for ( int c = 0; c <= params.cols; ++c )
    {
      switch_box sb;
      sb.row = r;
      sb.col = c;
      sb.incident[0] = c > 0 ? f.h_group( r, c - 1 ) : -1;
      sb.incident[1] = c < params.cols ? f.h_group( r, c ) : -1;
      sb.incident[2] = r > 0 ? f.v_group( c, r - 1 ) : -1;
      sb.incident[3] = r < params.rows ? f.v_group( c, r ) : -1;
      f.switch_boxes.push_back( sb );
    }
  }

  for ( int gid = 0; gid < int( f.seg_groups.size() ); ++gid )
  {
    auto const& g = f.seg_groups[gid];
    for ( bool high : { false, true } )
    {
      connection_box cb;
      cb.group = gid;
      cb.facing_high = high;
      if ( g.horizontal )
      {
        int const row = high ? g.channel : g.channel - 1;
        if ( row >= 0 && row < params.rows )
        {
          cb.plb = f.plb_id( row, g.pos );
          cb.plb_side = high ? side::south : side::north;
        }
      }
      else
      {
        int const col = high ? g.channel : g.channel - 1;
        if ( col >= 0 && col < params.cols )
        {
          cb.plb = f.plb_id( g.pos, col );
          cb.plb_side = high ? side::west : side::east;
        }
      }
      f.connection_boxes.push_back( cb );
    }
  }

  return f;
}

/*! \brief Routing-resource graph over pin and wire nodes.
 *
 * Nodes have unit capacity.  Edges run from output pins into every track
 * of the adjacent channel (Fc = 1.0), both ways between same-track
 * segments meeting at a switch box (disjoint pattern), and from every
 * track of the adjacent channel into input pins (Fc = 1.0).
 */
struct routing_graph
{
  enum class node_kind : uint8_t
  {
    input_pin,
    output_pin,
    segment
  };

  struct node
  {
    node_kind kind;
    int plb = -1;  // pins
    int pin = -1;  // pin index within the PLB
    int group = -1; // segments
    int track = -1;
  };

  int plb_count = 0;
  int inputs_per_plb = 0;
  int outputs_per_plb = 0;
  int width = 0;

  std::vector<node> nodes;
  std::vector<std::vector<int>> edges_out;

  int pins_per_plb() const { return inputs_per_plb + outputs_per_plb; }
  int input_pin_node( int plb, int pin ) const { return plb * pins_per_plb() + pin; }
  int output_pin_node( int plb, int pin ) const
  {
    return plb * pins_per_plb() + inputs_per_plb + pin;
  }
  int segment_node( int group, int track ) const
  {
    return plb_count * pins_per_plb() + group * width + track;
  }

  std::size_t num_edges() const
  {
    std::size_t n = 0;
    for ( auto const& adj : edges_out )
      n += adj.size();
    return n;
  }
};

inline routing_graph build_routing_graph( fabric const& f )
{
  auto const& p = f.params;
  routing_graph g;
  g.plb_count = f.num_plbs();
  g.inputs_per_plb = p.plb_inputs;
  g.outputs_per_plb = p.plb_outputs;
  g.width = p.channel_width;

  for ( int plb = 0; plb < g.plb_count; ++plb )
  {
    for ( int i = 0; i < p.plb_inputs; ++i )
      g.nodes.push_back( { routing_graph::node_kind::input_pin, plb, i, -1, -1 } );
    for ( int o = 0; o < p.plb_outputs; ++o )
      g.nodes.push_back( { routing_graph::node_kind::output_pin, plb, o, -1, -1 } );
  }
  for ( int gid = 0; gid < int( f.seg_groups.size() ); ++gid )
    for ( int t = 0; t < p.channel_width; ++t )
      g.nodes.push_back( { routing_graph::node_kind::segment, -1, -1, gid, t } );

  g.edges_out.resize( g.nodes.size() );

  // connection boxes: pins <-> all tracks of the adjacent group
  for ( int plb = 0; plb < g.plb_count; ++plb )
  {
    int const row = f.plb_row( plb );
    int const col = f.plb_col( plb );
    for ( int i = 0; i < p.plb_inputs; ++i )
    {
      int const grp = f.group_at( row, col, pin_side( i ) );
      for ( int t = 0; t < p.channel_width; ++t )
        g.edges_out[g.segment_node( grp, t )].push_back( g.input_pin_node( plb, i ) );
    }
    for ( int o = 0; o < p.plb_outputs; ++o )
    {
      int const grp = f.group_at( row, col, pin_side( o ) );
      auto& adj = g.edges_out[g.output_pin_node( plb, o )];
      for ( int t = 0; t < p.channel_width; ++t )
        adj.push_back( g.segment_node( grp, t ) );
    }
  }

  // switch boxes: same-track edges between every pair of incident groups
  for ( auto const& sb : f.switch_boxes )
  {
    for ( auto const& [a, b] : sb_pair_order )
    {
      if ( sb.incident[a] < 0 || sb.incident[b] < 0 )
        continue;
      for ( int t = 0; t < p.channel_width; ++t )
      {
        int const na = g.segment_node( sb.incident[a], t );
        int const nb = g.segment_node( sb.incident[b], t );
        g.edges_out[na].push_back( nb );
        g.edges_out[nb].push_back( na );
      }
    }
  }

  return g;
}

} // namespace afpga
