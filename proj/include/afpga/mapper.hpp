// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file mapper.hpp
  \brief Technology mapping and PLB packing

  tech_map turns every netlist cell into a LUT function: stateless cells
  become plain truth tables, the Muller cells C2/C3 become feedback
  functions with one input position reserved for their own output, and
  PDEL cells stay behind to be bound to delay elements during packing.

  pack greedily fills logic elements.  Feedback and 7-input functions own
  a whole LE through the o0 tap; up to two 6-input functions share an LE
  through the o1/o2 taps when their input sets fit the 6 shared LUT
  inputs; a completion-style OR of two co-located dual-rail drivers can
  ride the validity LUT2.  LEs are then paired into PLBs preferring pairs
  that share nets, and each PDEL binds to the delay element of a PLB
  already touching one of its nets, or to a fresh PLB.
*/

#pragma once

#include <algorithm>
#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "netlist.hpp"
#include "plb.hpp"

namespace afpga
{

/*! \brief Truth table over up to 7 inputs; row index bit i is input i. */
struct small_truth_table
{
  int num_inputs = 0;
  std::bitset<128> bits;

  bool eval( uint8_t row ) const { return bits[row & ( ( 1u << num_inputs ) - 1 )]; }

  bool operator==( small_truth_table const& o ) const
  {
    return num_inputs == o.num_inputs && bits == o.bits;
  }
};

/*! \brief One mapped LUT function.
 *
 * \c inputs lists the external input nets; when \c feedback is set the
 * table has one extra trailing input position carrying the function's
 * own output.  Functions with 7 total inputs or feedback can only use
 * the o0 tap (root); everything else is a half function for o1/o2.
 */
struct le_function
{
  std::string name;
  std::vector<std::string> inputs;
  std::string output;
  bool feedback = false;
  small_truth_table table;

  int total_inputs() const { return int( inputs.size() ) + ( feedback ? 1 : 0 ); }
  bool is_root() const { return feedback || total_inputs() == 7; }

  bool operator==( le_function const& ) const = default;
};

class mapper_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/*! \brief Maps netlist cells to LE functions; PDEL cells pass through.
 *
 * Repeated input nets of a cell are collapsed to one table input.
 * Throws mapper_error (unsupported-cell) beyond 7 table inputs.
 */
inline std::vector<le_function> tech_map( netlist const& n )
{
  std::vector<le_function> funcs;
  for ( auto const& g : n.gates )
  {
    if ( g.kind == cell_kind::pdel )
      continue;

    le_function f;
    f.name = g.name;
    f.output = g.output;
    std::vector<int> position; // gate input -> distinct-net position
    for ( auto const& net : g.inputs )
    {
      auto it = std::find( f.inputs.begin(), f.inputs.end(), net );
      if ( it == f.inputs.end() )
      {
        position.push_back( int( f.inputs.size() ) );
        f.inputs.push_back( net );
      }
      else
      {
        position.push_back( int( it - f.inputs.begin() ) );
      }
    }

    f.feedback = kind_info( g.kind ).stateful;
    int const total = f.total_inputs();
    if ( total > 7 )
      throw mapper_error( "unsupported-cell: '" + g.name + "' needs " + std::to_string( total ) +
                          " LUT inputs" );

    f.table.num_inputs = total;
    for ( int row = 0; row < ( 1 << total ); ++row )
    {
      std::vector<bool> in( g.inputs.size() );
      for ( std::size_t j = 0; j < g.inputs.size(); ++j )
        in[j] = ( row >> position[j] ) & 1;
      bool value;
      if ( f.feedback )
        value = eval_muller( in, ( row >> int( f.inputs.size() ) ) & 1 );
      else
        value = eval_stateless( g.kind, in );
      f.table.bits[row] = value;
    }
    funcs.push_back( std::move( f ) );
  }
  return funcs;
}

/*! \brief One LE: function indices per tap slot plus the ordered nets
 *         bound to the LUT input positions.
 */
struct le_assignment
{
  std::array<int, 3> slot = { -1, -1, -1 }; // o0, o1, o2
  int v_slot = -1;                          // validity LUT2
  std::vector<std::string> input_nets;      // position i -> net

  bool used() const { return slot[0] >= 0 || slot[1] >= 0 || slot[2] >= 0 || v_slot >= 0; }
  bool root_locked() const { return slot[0] >= 0; }

  int used_slots() const
  {
    int count = v_slot >= 0 ? 1 : 0;
    for ( int s : slot )
      count += ( s >= 0 );
    return count;
  }

  int input_position( std::string_view net ) const
  {
    for ( std::size_t i = 0; i < input_nets.size(); ++i )
      if ( input_nets[i] == net )
        return int( i );
    return -1;
  }

  bool operator==( le_assignment const& ) const = default;
};

struct plb_cluster
{
  std::array<le_assignment, 2> les;
  int pdel_gate = -1; // index into the source netlist's gates

  bool operator==( plb_cluster const& ) const = default;
};

/*! \brief Planned intra-PLB interconnection-matrix connection. */
struct im_link
{
  int cluster;
  im_sink sink;
  im_source src;
  std::string net;

  bool operator==( im_link const& ) const = default;
};

struct packing_stats
{
  int used_slots = 0;
  int occupied_les = 0;
  int occupied_plbs = 0;

  bool operator==( packing_stats const& ) const = default;
};

struct packing
{
  netlist source;
  std::vector<le_function> funcs;
  std::vector<plb_cluster> clusters;
  std::vector<im_link> im_plan;
  packing_stats stats;

  bool operator==( packing const& ) const = default;
};

namespace detail
{

/*! \brief Nets touched by the functions hosted on an LE or cluster. */
inline std::set<std::string> assignment_nets( le_assignment const& a,
                                              std::vector<le_function> const& funcs )
{
  std::set<std::string> nets;
  auto add_func = [&]( int fi ) {
    if ( fi < 0 )
      return;
    for ( auto const& in : funcs[fi].inputs )
      nets.insert( in );
    nets.insert( funcs[fi].output );
  };
  for ( int s : a.slot )
    add_func( s );
  add_func( a.v_slot );
  return nets;
}

inline std::set<std::string> cluster_nets( plb_cluster const& c,
                                           std::vector<le_function> const& funcs )
{
  auto nets = assignment_nets( c.les[0], funcs );
  auto more = assignment_nets( c.les[1], funcs );
  nets.insert( more.begin(), more.end() );
  return nets;
}

/*! \brief True for a 2-input OR whose inputs are the rails of a declared
 *         dual-rail channel (a completion detector).
 */
inline bool is_completion_or( le_function const& f, netlist const& n )
{
  if ( f.feedback || f.inputs.size() != 2 || f.table.num_inputs != 2 )
    return false;
  if ( !( !f.table.bits[0] && f.table.bits[1] && f.table.bits[2] && f.table.bits[3] ) )
    return false;
  for ( auto const& c : n.channels )
  {
    if ( c.kind != channel_kind::dual_rail )
      continue;
    bool const straight = f.inputs[0] == c.rail_t && f.inputs[1] == c.rail_f;
    bool const swapped = f.inputs[0] == c.rail_f && f.inputs[1] == c.rail_t;
    if ( straight || swapped )
      return true;
  }
  return false;
}

} // namespace detail

/*! \brief Greedy deterministic packing; always succeeds by opening PLBs. */
inline packing pack( std::vector<le_function> funcs, netlist const& n )
{
  packing p;
  p.source = n;
  p.funcs = std::move( funcs );

  std::vector<int> order( p.funcs.size() );
  for ( std::size_t i = 0; i < order.size(); ++i )
    order[i] = int( i );
  std::stable_sort( order.begin(), order.end(), [&]( int a, int b ) {
    if ( p.funcs[a].total_inputs() != p.funcs[b].total_inputs() )
      return p.funcs[a].total_inputs() > p.funcs[b].total_inputs();
    return p.funcs[a].name < p.funcs[b].name;
  } );

  std::vector<le_assignment> les;
  for ( int fi : order )
  {
    auto const& f = p.funcs[fi];

    if ( detail::is_completion_or( f, n ) )
    {
      bool placed = false;
      for ( auto& le : les )
      {
        if ( le.root_locked() || le.v_slot >= 0 || le.slot[1] < 0 || le.slot[2] < 0 )
          continue;
        std::set<std::string> outs = { p.funcs[le.slot[1]].output, p.funcs[le.slot[2]].output };
        if ( outs == std::set<std::string>{ f.inputs[0], f.inputs[1] } )
        {
          le.v_slot = fi;
          placed = true;
          break;
        }
      }
      if ( placed )
        continue;
    }

    if ( f.is_root() )
    {
      le_assignment le;
      le.slot[0] = fi;
      le.input_nets = f.inputs;
      if ( f.feedback )
        le.input_nets.push_back( f.output );
      les.push_back( std::move( le ) );
      continue;
    }

    bool placed = false;
    for ( auto& le : les )
    {
      if ( le.root_locked() || le.slot[2] >= 0 )
        continue;
      std::set<std::string> merged( le.input_nets.begin(), le.input_nets.end() );
      for ( auto const& in : f.inputs )
        merged.insert( in );
      if ( int( merged.size() ) > 6 )
        continue;
      le.slot[le.slot[1] < 0 ? 1 : 2] = fi;
      for ( auto const& in : f.inputs )
        if ( le.input_position( in ) < 0 )
          le.input_nets.push_back( in );
      placed = true;
      break;
    }
    if ( !placed )
    {
      le_assignment le;
      le.slot[1] = fi;
      le.input_nets = f.inputs;
      les.push_back( std::move( le ) );
    }
  }

  // pair LEs into PLBs, preferring the pair with the most shared nets
  std::vector<bool> paired( les.size(), false );
  for ( std::size_t i = 0; i < les.size(); ++i )
  {
    if ( paired[i] )
      continue;
    paired[i] = true;
    auto const nets_i = detail::assignment_nets( les[i], p.funcs );
    int best = -1, best_shared = -1;
    for ( std::size_t j = i + 1; j < les.size(); ++j )
    {
      if ( paired[j] )
        continue;
      auto const nets_j = detail::assignment_nets( les[j], p.funcs );
      int shared = 0;
      for ( auto const& net : nets_j )
        shared += nets_i.count( net );
      if ( shared > best_shared )
      {
        best_shared = shared;
        best = int( j );
      }
    }
    plb_cluster c;
    c.les[0] = les[i];
    if ( best >= 0 )
    {
      paired[best] = true;
      c.les[1] = les[best];
    }
    p.clusters.push_back( std::move( c ) );
  }

  // bind PDEL cells to delay elements
  for ( int gi = 0; gi < int( n.gates.size() ); ++gi )
  {
    auto const& g = n.gates[gi];
    if ( g.kind != cell_kind::pdel )
      continue;
    std::set<std::string> const pdel_nets = { g.inputs[0], g.output };
    int target = -1;
    for ( std::size_t c = 0; c < p.clusters.size() && target < 0; ++c )
    {
      if ( p.clusters[c].pdel_gate >= 0 )
        continue;
      auto const nets = detail::cluster_nets( p.clusters[c], p.funcs );
      for ( auto const& net : pdel_nets )
      {
        if ( nets.count( net ) )
        {
          target = int( c );
          break;
        }
      }
    }
    if ( target < 0 )
    {
      p.clusters.push_back( {} );
      target = int( p.clusters.size() ) - 1;
    }
    p.clusters[target].pdel_gate = gi;
  }

  // intra-PLB connection plan: feedback loops plus any sink whose driver
  // lives in the same cluster
  for ( int ci = 0; ci < int( p.clusters.size() ); ++ci )
  {
    auto const& c = p.clusters[ci];
    auto local_driver = [&]( std::string const& net ) -> std::optional<im_source> {
      for ( int l = 0; l < 2; ++l )
      {
        for ( int s = 0; s < 3; ++s )
          if ( c.les[l].slot[s] >= 0 && p.funcs[c.les[l].slot[s]].output == net )
            return im_source::le_output( l, s );
        if ( c.les[l].v_slot >= 0 && p.funcs[c.les[l].v_slot].output == net )
          return im_source::le_output( l, 3 );
      }
      if ( c.pdel_gate >= 0 && n.gates[c.pdel_gate].output == net )
        return im_source::pde_out();
      return std::nullopt;
    };

    for ( int l = 0; l < 2; ++l )
    {
      auto const& le = c.les[l];
      for ( std::size_t pos = 0; pos < le.input_nets.size(); ++pos )
      {
        if ( auto src = local_driver( le.input_nets[pos] ) )
          p.im_plan.push_back( { ci, im_sink::le_input( l, int( pos ) ), *src,
                                 le.input_nets[pos] } );
      }
    }
    if ( c.pdel_gate >= 0 )
    {
      if ( auto src = local_driver( n.gates[c.pdel_gate].inputs[0] ) )
        p.im_plan.push_back( { ci, im_sink::pde_in(), *src, n.gates[c.pdel_gate].inputs[0] } );
    }
  }

  for ( auto const& c : p.clusters )
  {
    int le_used = 0, slots = 0;
    for ( auto const& le : c.les )
    {
      le_used += le.used();
      slots += le.used_slots();
    }
    p.stats.used_slots += slots;
    p.stats.occupied_les += le_used;
    p.stats.occupied_plbs += ( slots > 0 || c.pdel_gate >= 0 );
  }

  return p;
}

/*! \brief used slots / (8 x occupied PLBs); 0 for an empty packing. */
inline double filling_ratio( packing const& p )
{
  if ( p.stats.occupied_plbs == 0 )
    return 0.0;
  return double( p.stats.used_slots ) / ( 8.0 * p.stats.occupied_plbs );
}

/*! \brief Concrete LUT programming of one LE assignment.
 *
 * A root function replicates its table across the 128 rows keyed by its
 * low input positions.  Half functions project the 6 shared inputs onto
 * their own positions: o1 fills rows 0..63, o2 rows 64..127.  A validity
 * function programs the LUT2 over (o2, o1).
 */
inline le_config realize_le( le_assignment const& a, std::vector<le_function> const& funcs )
{
  le_config cfg;
  if ( a.slot[0] >= 0 )
  {
    auto const& f = funcs[a.slot[0]];
    int const m = f.total_inputs();
    for ( int idx = 0; idx < 128; ++idx )
      cfg.lut7.bits[idx] = f.table.bits[idx & ( ( 1 << m ) - 1 )];
    return cfg;
  }

  auto project = [&]( le_function const& f, int v6 ) {
    uint8_t row = 0;
    for ( std::size_t j = 0; j < f.inputs.size(); ++j )
    {
      int const pos = a.input_position( f.inputs[j] );
      if ( ( v6 >> pos ) & 1 )
        row |= uint8_t( 1u << j );
    }
    return row;
  };
  for ( int half = 1; half <= 2; ++half )
  {
    if ( a.slot[half] < 0 )
      continue;
    auto const& f = funcs[a.slot[half]];
    for ( int v6 = 0; v6 < 64; ++v6 )
      cfg.lut7.bits[( half == 2 ? 64 : 0 ) + v6] = f.table.bits[project( f, v6 )];
  }
  if ( a.v_slot >= 0 && a.slot[1] >= 0 && a.slot[2] >= 0 )
  {
    auto const& f = funcs[a.v_slot];
    std::string const& o1net = funcs[a.slot[1]].output;
    for ( int v1 = 0; v1 < 2; ++v1 )
    {
      for ( int v0 = 0; v0 < 2; ++v0 )
      {
        uint8_t row = 0;
        for ( std::size_t j = 0; j < f.inputs.size(); ++j )
          if ( f.inputs[j] == o1net ? v0 : v1 )
            row |= uint8_t( 1u << j );
        cfg.lut2.bits[v1 * 2 + v0] = f.table.bits[row];
      }
    }
  }
  return cfg;
}

/*! \brief Legality checks for any packing: every function placed once,
 *         tap-class rules, input budgets, realized feedback loops,
 *         consistent intra-PLB links and stats.
 */
inline diagnostics check_packing( packing const& p )
{
  diagnostics diags;
  std::vector<int> placed( p.funcs.size(), 0 );

  for ( int ci = 0; ci < int( p.clusters.size() ); ++ci )
  {
    auto const& c = p.clusters[ci];
    for ( int l = 0; l < 2; ++l )
    {
      auto const& le = c.les[l];
      auto where = "cluster " + std::to_string( ci ) + " LE " + std::to_string( l );

      for ( int s = 0; s < 3; ++s )
        if ( le.slot[s] >= 0 )
          placed[le.slot[s]]++;
      if ( le.v_slot >= 0 )
        placed[le.v_slot]++;

      if ( le.root_locked() )
      {
        if ( le.slot[1] >= 0 || le.slot[2] >= 0 || le.v_slot >= 0 )
          diags.push_back( { "slot-conflict", where + ": o0 shares the LE" } );
        auto const& f = p.funcs[le.slot[0]];
        if ( f.total_inputs() > 7 )
          diags.push_back( { "input-overflow", where + ": root has >7 inputs" } );
        if ( int( le.input_nets.size() ) != f.total_inputs() )
          diags.push_back( { "input-binding", where + ": root input list mismatch" } );
      }
      else
      {
        if ( int( le.input_nets.size() ) > 6 )
          diags.push_back( { "input-overflow", where + ": >6 shared inputs" } );
        for ( int s = 1; s < 3; ++s )
        {
          if ( le.slot[s] < 0 )
            continue;
          auto const& f = p.funcs[le.slot[s]];
          if ( f.is_root() )
            diags.push_back( { "slot-conflict", where + ": root function in a half slot" } );
          for ( auto const& in : f.inputs )
            if ( le.input_position( in ) < 0 )
              diags.push_back( { "input-binding", where + ": net '" + in + "' unbound" } );
        }
        if ( le.v_slot >= 0 )
        {
          auto const& f = p.funcs[le.v_slot];
          bool ok = le.slot[1] >= 0 && le.slot[2] >= 0 && f.inputs.size() == 2;
          if ( ok )
          {
            std::set<std::string> outs = { p.funcs[le.slot[1]].output,
                                           p.funcs[le.slot[2]].output };
            ok = outs == std::set<std::string>{ f.inputs[0], f.inputs[1] };
          }
          if ( !ok )
            diags.push_back(
                { "invalid-validity", where + ": v function inputs are not the LE's o1/o2" } );
        }
      }

      // feedback loops must appear in the plan
      if ( le.slot[0] >= 0 && p.funcs[le.slot[0]].feedback )
      {
        auto const& f = p.funcs[le.slot[0]];
        bool found = false;
        for ( auto const& link : p.im_plan )
        {
          found = found || ( link.cluster == ci &&
                             link.sink == im_sink::le_input( l, int( f.inputs.size() ) ) &&
                             link.src == im_source::le_output( l, 0 ) );
        }
        if ( !found )
          diags.push_back( { "missing-feedback", where + ": loop not in the plan" } );
      }
    }
  }

  for ( std::size_t fi = 0; fi < p.funcs.size(); ++fi )
  {
    if ( placed[fi] == 0 )
      diags.push_back( { "unplaced-function", "'" + p.funcs[fi].name + "' not in any slot" } );
    else if ( placed[fi] > 1 )
      diags.push_back( { "duplicate-function", "'" + p.funcs[fi].name + "' placed " +
                                                   std::to_string( placed[fi] ) + " times" } );
  }

  for ( auto const& link : p.im_plan )
  {
    if ( link.cluster < 0 || link.cluster >= int( p.clusters.size() ) )
    {
      diags.push_back( { "bad-link", "link to nonexistent cluster" } );
      continue;
    }
    auto const& c = p.clusters[link.cluster];
    std::string produced;
    if ( link.src.is_le_output() )
    {
      auto const& le = c.les[link.src.le()];
      int const fi = link.src.le_slot() == 3 ? le.v_slot : le.slot[link.src.le_slot()];
      if ( fi >= 0 )
        produced = p.funcs[fi].output;
    }
    else if ( link.src.is_pde_out() && c.pdel_gate >= 0 )
    {
      produced = p.source.gates[c.pdel_gate].output;
    }
    if ( produced != link.net )
      diags.push_back( { "bad-link", "source does not drive net '" + link.net + "'" } );

    if ( link.sink.is_le_input() )
    {
      auto const& le = c.les[link.sink.le()];
      if ( link.sink.le_pos() >= int( le.input_nets.size() ) ||
           le.input_nets[link.sink.le_pos()] != link.net )
        diags.push_back( { "bad-link", "sink position does not carry net '" + link.net + "'" } );
    }
    else if ( link.sink.is_pde_in() )
    {
      if ( c.pdel_gate < 0 || p.source.gates[c.pdel_gate].inputs[0] != link.net )
        diags.push_back( { "bad-link", "PDE sink does not consume net '" + link.net + "'" } );
    }
  }

  std::map<int, int> pdel_bound;
  for ( auto const& c : p.clusters )
  {
    if ( c.pdel_gate < 0 )
      continue;
    if ( c.pdel_gate >= int( p.source.gates.size() ) ||
         p.source.gates[c.pdel_gate].kind != cell_kind::pdel )
    {
      diags.push_back( { "pdel-conflict", "cluster binds gate " +
                                              std::to_string( c.pdel_gate ) +
                                              " which is not a delay cell" } );
      continue;
    }
    pdel_bound[c.pdel_gate]++;
  }
  for ( int gi = 0; gi < int( p.source.gates.size() ); ++gi )
  {
    if ( p.source.gates[gi].kind != cell_kind::pdel )
      continue;
    int const count = pdel_bound.count( gi ) ? pdel_bound[gi] : 0;
    if ( count != 1 )
      diags.push_back( { count == 0 ? "pdel-unbound" : "pdel-conflict",
                         "delay cell '" + p.source.gates[gi].name + "' bound " +
                             std::to_string( count ) + " times" } );
  }

  packing_stats want;
  for ( auto const& c : p.clusters )
  {
    int slots = 0;
    for ( auto const& le : c.les )
    {
      want.occupied_les += le.used();
      slots += le.used_slots();
    }
    want.used_slots += slots;
    want.occupied_plbs += ( slots > 0 || c.pdel_gate >= 0 );
  }
  if ( !( want == p.stats ) )
    diags.push_back( { "stats-mismatch", "recomputed stats differ" } );

  return diags;
}

} // namespace afpga
