// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file plb.hpp
  \brief Programmable logic block: interconnection matrix, two logic
         elements and a programmable delay element

  A logic element (LE) is a LUT7-3 feeding a LUT2-1.  The LUT7-3 is a
  128-bit table read as a multiplexer tree with i0 at the leaves and i6
  at the root; besides the root output o0 it taps the two depth-1 tree
  nodes, so o1 and o2 are the i6=0 / i6=1 cofactors of the table over
  the shared inputs i0..i5, and o0 = i6 ? o2 : o1.  The LUT2 input pair
  is hard-wired to (o2, o1) and produces the validity output v.

  The interconnection matrix (IM) is a full crossbar from 23 sources
  (12 PLB input pins, 8 LE outputs, PDE output, constant 0, constant 1)
  to 23 sinks (14 LE inputs, PDE input, 8 PLB output pins), which is
  what permits looped-LUT state-holding elements.
*/

#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "diagnostics.hpp"

namespace afpga
{

class plb_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/*! \brief 128 configuration bits; index(i6..i0) = sum of i_k * 2^k. */
struct lut7_table
{
  std::bitset<128> bits;

  bool operator==( lut7_table const& o ) const { return bits == o.bits; }
};

/*! \brief 4 configuration bits indexed by (v1, v0). */
struct lut2_table
{
  std::bitset<4> bits;

  bool eval( bool v1, bool v0 ) const { return bits[( v1 ? 2 : 0 ) + ( v0 ? 1 : 0 )]; }
  bool operator==( lut2_table const& o ) const { return bits == o.bits; }
};

struct le_outputs
{
  bool o0, o1, o2;
};

/*! \brief Evaluates the three LUT7-3 outputs for a 7-bit input vector
 *         (bit k of \p inputs is i_k).
 */
inline le_outputs eval_lut7_3( lut7_table const& table, uint8_t inputs )
{
  uint8_t const idx = inputs & 0x7f;
  bool const o1 = table.bits[idx & 0x3f];
  bool const o2 = table.bits[0x40 | ( idx & 0x3f )];
  bool const o0 = ( idx & 0x40 ) ? o2 : o1;
  return { o0, o1, o2 };
}

struct le_config
{
  lut7_table lut7;
  lut2_table lut2;

  bool operator==( le_config const& ) const = default;
};

struct le_eval_result
{
  bool o0, o1, o2, v;
};

/*! \brief Full LE evaluation; v = lut2(o2, o1). */
inline le_eval_result eval_le( le_config const& cfg, uint8_t inputs )
{
  auto const [o0, o1, o2] = eval_lut7_3( cfg.lut7, inputs );
  return { o0, o1, o2, cfg.lut2.eval( o2, o1 ) };
}

/*! \brief PDE delay code; the element adds k units of transport delay. */
struct pde_config
{
  static constexpr int max_delay = 15;

  int k = 0;

  bool operator==( pde_config const& ) const = default;
};

// ---------------------------------------------------------------------------
// IM sink / source index spaces
// ---------------------------------------------------------------------------

inline constexpr int im_sink_count = 23;
inline constexpr int im_source_count = 23;
inline constexpr int im_select_bits = 5;

/*! \brief One of the 23 configurable IM sinks. */
struct im_sink
{
  uint8_t index;

  // layout: LE-A in0..in6 = 0..6, LE-B in0..in6 = 7..13, PDE in = 14,
  // PLB out0..out7 = 15..22
  static im_sink le_input( int le, int pos ) { return { uint8_t( le * 7 + pos ) }; }
  static im_sink pde_in() { return { 14 }; }
  static im_sink plb_output( int pin ) { return { uint8_t( 15 + pin ) }; }

  bool is_le_input() const { return index < 14; }
  bool is_pde_in() const { return index == 14; }
  bool is_plb_output() const { return index >= 15; }
  int le() const { return index / 7; }
  int le_pos() const { return index % 7; }
  int output_pin() const { return index - 15; }

  bool operator==( im_sink const& ) const = default;
};

/*! \brief One of the 23 IM sources. */
struct im_source
{
  uint8_t index;

  // layout: PLB in0..in11 = 0..11, LE-A o0,o1,o2,v = 12..15,
  // LE-B o0,o1,o2,v = 16..19, PDE out = 20, const 0 = 21, const 1 = 22
  static im_source plb_input( int pin ) { return { uint8_t( pin ) }; }
  static im_source le_output( int le, int slot ) { return { uint8_t( 12 + le * 4 + slot ) }; }
  static im_source pde_out() { return { 20 }; }
  static im_source const0() { return { 21 }; }
  static im_source const1() { return { 22 }; }

  bool is_plb_input() const { return index < 12; }
  bool is_le_output() const { return index >= 12 && index < 20; }
  bool is_pde_out() const { return index == 20; }
  bool is_const() const { return index >= 21; }
  bool const_value() const { return index == 22; }
  int input_pin() const { return index; }
  int le() const { return ( index - 12 ) / 4; }
  int le_slot() const { return ( index - 12 ) % 4; } // 0..3 = o0,o1,o2,v

  bool operator==( im_source const& ) const = default;
};

/*! \brief Crossbar configuration: a 5-bit source selection per sink.
 *
 * The reset state points every sink at constant 0.
 */
struct im_config
{
  std::array<uint8_t, im_sink_count> selection;

  im_config() { selection.fill( im_source::const0().index ); }

  void connect( im_sink sink, im_source src ) { selection[sink.index] = src.index; }

  bool operator==( im_config const& ) const = default;
};

/*! \brief Resolves the configured source of a sink.
 *
 * Throws on a sink index outside 0..22.
 */
inline im_source im_resolve( im_config const& im, int sink_index )
{
  if ( sink_index < 0 || sink_index >= im_sink_count )
    throw plb_error( "invalid-sink: index " + std::to_string( sink_index ) );
  return { im.selection[sink_index] };
}

inline im_source im_resolve( im_config const& im, im_sink sink )
{
  return im_resolve( im, int( sink.index ) );
}

struct plb_config
{
  le_config le_a;
  le_config le_b;
  pde_config pde;
  im_config im;

  le_config const& le( int which ) const { return which == 0 ? le_a : le_b; }
  le_config& le( int which ) { return which == 0 ? le_a : le_b; }

  bool operator==( plb_config const& ) const = default;
};

/*! \brief Static checks on one PLB configuration.
 *
 * Reports out-of-range source selections and zero-delay loops.  A loop
 * is legal when it passes through an LE or through the PDE with a
 * nonzero delay code; only the IM crossbar and a k=0 PDE are
 * delay-free, so the single illegal shape is the PDE fed back onto
 * itself with k=0.  The check walks the delay-free dependency graph so
 * it stays valid if more delay-free paths are ever added.
 */
inline diagnostics validate_plb_config( plb_config const& cfg )
{
  diagnostics diags;

  for ( int s = 0; s < im_sink_count; ++s )
  {
    if ( cfg.im.selection[s] >= im_source_count )
    {
      diags.push_back( { "invalid-source",
                         "sink " + std::to_string( s ) + " selects source index " +
                             std::to_string( int( cfg.im.selection[s] ) ) } );
    }
  }
  if ( cfg.pde.k < 0 || cfg.pde.k > pde_config::max_delay )
  {
    diags.push_back( { "invalid-delay-code", "pde k = " + std::to_string( cfg.pde.k ) } );
  }
  if ( !diags.empty() )
    return diags;

  // Delay-free graph over source nodes: src -> src when a delay-free
  // element forwards one to the other.  The IM itself has no storage and
  // counts as delay-free here; LE outputs and a k>0 PDE break cycles.
  if ( cfg.pde.k == 0 )
  {
    im_source const fed = im_resolve( cfg.im, im_sink::pde_in() );
    // follow delay-free forwarding from pde_out back to pde_in
    if ( fed == im_source::pde_out() )
    {
      diags.push_back(
          { "zero-delay-loop", "pde output feeds its own input with delay code 0" } );
    }
  }

  return diags;
}

} // namespace afpga
