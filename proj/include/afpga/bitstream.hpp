// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file bitstream.hpp
  \brief Bit-exact serialization of a fabric configuration (`.afpg` images)

  Image layout, all bit fields packed LSB-first within ascending bytes:

      header   "AFPG" magic, version byte (1), then rows, cols,
               channel_width, plb_inputs, plb_outputs as uint16 LE
      PLB      one 48-byte frame per PLB in row-major order:
               lut7_A(128) | lut2_A(4) | lut7_B(128) | lut2_B(4) |
               pde(4) | im(23 x 5 = 115) | 1 zero pad bit
      SB       one frame per switch box in row-major order: W bits per
               present pair in canonical pair order, zero-padded to a byte
      CB       one frame per pin-bearing connection box in canonical
               (group-major, low-facing-first) order: W bits per pin,
               side inputs before side outputs, zero-padded to a byte

  The image length is a pure function of the parameters; see
  image_length.
*/

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "arch.hpp"
#include "diagnostics.hpp"
#include "plb.hpp"

namespace afpga
{

class bitstream_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/*! \brief Per-switch-box edge enables: [present-pair index][track].
 *
 * Pairs are the subset of the canonical pair order whose two local
 * directions both have incident groups, kept in canonical order.
 */
struct switch_box_bits
{
  std::vector<std::vector<bool>> pair_enable;

  bool operator==( switch_box_bits const& ) const = default;
};

/*! \brief Per-connection-box pin enables: [pin][track]; empty for a
 *         pinless (edge-facing) box.
 */
struct connection_box_bits
{
  std::vector<std::vector<bool>> pin_enable;

  bool operator==( connection_box_bits const& ) const = default;
};

/*! \brief Full programming state of a fabric. */
struct fabric_config
{
  fabric_params params;
  std::vector<plb_config> plbs;            // row-major
  std::vector<switch_box_bits> sb_bits;    // row-major
  std::vector<connection_box_bits> cb_bits; // canonical connection-box order

  bool operator==( fabric_config const& ) const = default;
};

/*! \brief Number of present pairs at a switch box of the given degree. */
inline int sb_pair_count( int degree ) { return degree * ( degree - 1 ) / 2; }

/*! \brief Pins served by a pin-bearing connection box, in frame order:
 *         the facing side's input pins by side position, then its output
 *         pins by side position.  Values are PLB-local pin codes, with
 *         outputs offset by plb_inputs.
 */
inline std::vector<int> cb_pin_codes( fabric_params const& p, connection_box const& cb )
{
  std::vector<int> codes;
  if ( cb.plb < 0 )
    return codes;
  for ( int i = int( cb.plb_side ); i < p.plb_inputs; i += 4 )
    codes.push_back( i );
  for ( int o = int( cb.plb_side ); o < p.plb_outputs; o += 4 )
    codes.push_back( p.plb_inputs + o );
  return codes;
}

/*! \brief All-default configuration with correctly shaped route bits. */
inline fabric_config make_fabric_config( fabric_params const& params )
{
  auto const f = build_fabric( params );
  fabric_config cfg;
  cfg.params = params;
  cfg.plbs.resize( f.num_plbs() );
  for ( auto const& sb : f.switch_boxes )
  {
    switch_box_bits bits;
    bits.pair_enable.assign( sb_pair_count( sb.degree() ),
                             std::vector<bool>( params.channel_width, false ) );
    cfg.sb_bits.push_back( std::move( bits ) );
  }
  for ( auto const& cb : f.connection_boxes )
  {
    connection_box_bits bits;
    bits.pin_enable.assign( cb_pin_codes( params, cb ).size(),
                            std::vector<bool>( params.channel_width, false ) );
    cfg.cb_bits.push_back( std::move( bits ) );
  }
  return cfg;
}

/*! \brief Structural encodability checks (shapes and field ranges). */
inline diagnostics validate_fabric_config( fabric_config const& cfg )
{
  diagnostics diags;
  fabric_params const& p = cfg.params;
  try
  {
    p.validate();
  }
  catch ( arch_error const& e )
  {
    diags.push_back( { "invalid-config", e.what() } );
    return diags;
  }

  auto const f = build_fabric( p );
  if ( int( cfg.plbs.size() ) != f.num_plbs() )
    diags.push_back( { "invalid-config", "expected " + std::to_string( f.num_plbs() ) +
                                             " PLB configs, got " +
                                             std::to_string( cfg.plbs.size() ) } );
  for ( std::size_t i = 0; i < cfg.plbs.size(); ++i )
  {
    auto const& plb = cfg.plbs[i];
    if ( plb.pde.k < 0 || plb.pde.k > pde_config::max_delay )
      diags.push_back( { "invalid-config", "PLB " + std::to_string( i ) + ": delay code " +
                                               std::to_string( plb.pde.k ) + " out of range" } );
    for ( int s = 0; s < im_sink_count; ++s )
    {
      if ( plb.im.selection[s] >= im_source_count )
      {
        diags.push_back( { "invalid-config", "PLB " + std::to_string( i ) + ": IM sink " +
                                                 std::to_string( s ) + " selects source " +
                                                 std::to_string( plb.im.selection[s] ) } );
      }
    }
  }

  if ( cfg.sb_bits.size() != f.switch_boxes.size() )
    diags.push_back( { "invalid-config", "switch-box bit count mismatch" } );
  else
  {
    for ( std::size_t i = 0; i < cfg.sb_bits.size(); ++i )
    {
      auto const& bits = cfg.sb_bits[i].pair_enable;
      bool ok = int( bits.size() ) == sb_pair_count( f.switch_boxes[i].degree() );
      for ( auto const& tr : bits )
        ok = ok && int( tr.size() ) == p.channel_width;
      if ( !ok )
        diags.push_back(
            { "invalid-config", "switch box " + std::to_string( i ) + ": bit shape mismatch" } );
    }
  }

  if ( cfg.cb_bits.size() != f.connection_boxes.size() )
    diags.push_back( { "invalid-config", "connection-box bit count mismatch" } );
  else
  {
    for ( std::size_t i = 0; i < cfg.cb_bits.size(); ++i )
    {
      auto const& bits = cfg.cb_bits[i].pin_enable;
      bool ok = bits.size() == cb_pin_codes( p, f.connection_boxes[i] ).size();
      for ( auto const& tr : bits )
        ok = ok && int( tr.size() ) == p.channel_width;
      if ( !ok )
        diags.push_back( { "invalid-config",
                           "connection box " + std::to_string( i ) + ": bit shape mismatch" } );
    }
  }

  return diags;
}

namespace detail
{

class bit_writer
{
public:
  void push( bool b )
  {
    if ( bit_ == 0 )
      bytes_.push_back( 0 );
    if ( b )
      bytes_.back() |= uint8_t( 1u << bit_ );
    bit_ = ( bit_ + 1 ) % 8;
  }

  void push_uint( uint64_t value, int nbits )
  {
    for ( int i = 0; i < nbits; ++i )
      push( ( value >> i ) & 1u );
  }

  void align()
  {
    while ( bit_ != 0 )
      push( false );
  }

  std::vector<uint8_t> take() { return std::move( bytes_ ); }

private:
  std::vector<uint8_t> bytes_;
  int bit_ = 0;
};

class bit_reader
{
public:
  explicit bit_reader( std::vector<uint8_t> const& bytes ) : bytes_( bytes ) {}

  bool pull()
  {
    bool const b = ( bytes_[pos_ >> 3] >> ( pos_ & 7 ) ) & 1u;
    ++pos_;
    return b;
  }

  uint64_t pull_uint( int nbits )
  {
    uint64_t v = 0;
    for ( int i = 0; i < nbits; ++i )
      v |= uint64_t( pull() ) << i;
    return v;
  }

  /*! \brief Skips to the next byte boundary; true iff all skipped bits were 0. */
  bool align_zero()
  {
    bool ok = true;
    while ( pos_ % 8 != 0 )
      ok = ok && !pull();
    return ok;
  }

private:
  std::vector<uint8_t> const& bytes_;
  std::size_t pos_ = 0;
};

} // namespace detail

inline constexpr int header_length = 15;
inline constexpr int plb_frame_length = 48;
inline constexpr uint8_t format_version = 1;

/*! \brief Bytes of a bit-field frame after zero padding. */
inline constexpr int frame_bytes( int bits ) { return ( bits + 7 ) / 8; }

/*! \brief Image length in bytes as a closed-form function of the parameters.
 *
 * With R rows, C cols, width W and P = (plb_inputs + plb_outputs) / 4
 * pins per connection box:
 *
 *     15 + 48·R·C
 *        + [4·ceil(W/8) + (2(R-1) + 2(C-1))·ceil(3W/8) + (R-1)(C-1)·ceil(6W/8)]
 *        + 4·R·C·ceil(P·W/8)
 *
 * The bracket walks the switch-box grid: 4 corners with one pair, the
 * edge boxes with three pairs, interior boxes with six.
 */
inline std::size_t image_length( fabric_params const& p )
{
  p.validate();
  int const R = p.rows, C = p.cols, W = p.channel_width;
  std::size_t len = header_length;
  len += std::size_t( plb_frame_length ) * R * C;
  len += 4u * frame_bytes( 1 * W );
  len += std::size_t( 2 * ( R - 1 ) + 2 * ( C - 1 ) ) * frame_bytes( 3 * W );
  len += std::size_t( ( R - 1 ) * ( C - 1 ) ) * frame_bytes( 6 * W );
  int const pins = ( p.plb_inputs + p.plb_outputs ) / 4;
  len += std::size_t( 4 * R * C ) * frame_bytes( pins * W );
  return len;
}

inline std::vector<uint8_t> encode( fabric_config const& cfg )
{
  if ( auto diags = validate_fabric_config( cfg ); !diags.empty() )
    throw bitstream_error( "invalid-config: " + diags.front().message );

  fabric_params const& p = cfg.params;
  detail::bit_writer w;
  for ( char c : { 'A', 'F', 'P', 'G' } )
    w.push_uint( uint8_t( c ), 8 );
  w.push_uint( format_version, 8 );
  for ( int v : { p.rows, p.cols, p.channel_width, p.plb_inputs, p.plb_outputs } )
    w.push_uint( uint16_t( v ), 16 );

  for ( auto const& plb : cfg.plbs )
  {
    for ( auto const* le : { &plb.le_a, &plb.le_b } )
    {
      for ( int i = 0; i < 128; ++i )
        w.push( le->lut7.bits[i] );
      for ( int i = 0; i < 4; ++i )
        w.push( le->lut2.bits[i] );
    }
    w.push_uint( uint8_t( plb.pde.k ), 4 );
    for ( int s = 0; s < im_sink_count; ++s )
      w.push_uint( plb.im.selection[s], im_select_bits );
    w.align();
  }

  for ( auto const& sb : cfg.sb_bits )
  {
    for ( auto const& tracks : sb.pair_enable )
      for ( bool b : tracks )
        w.push( b );
    w.align();
  }

  for ( auto const& cb : cfg.cb_bits )
  {
    if ( cb.pin_enable.empty() )
      continue;
    for ( auto const& tracks : cb.pin_enable )
      for ( bool b : tracks )
        w.push( b );
    w.align();
  }

  return w.take();
}

inline fabric_config decode( std::vector<uint8_t> const& image )
{
  if ( image.size() < header_length )
    throw bitstream_error( "truncated-image: shorter than the header" );
  if ( image[0] != 'A' || image[1] != 'F' || image[2] != 'P' || image[3] != 'G' )
    throw bitstream_error( "bad-magic: expected AFPG" );
  if ( image[4] != format_version )
    throw bitstream_error( "bad-version: got " + std::to_string( image[4] ) );

  detail::bit_reader r( image );
  r.pull_uint( 40 ); // magic + version, already checked

  fabric_params p;
  p.rows = int( r.pull_uint( 16 ) );
  p.cols = int( r.pull_uint( 16 ) );
  p.channel_width = int( r.pull_uint( 16 ) );
  p.plb_inputs = int( r.pull_uint( 16 ) );
  p.plb_outputs = int( r.pull_uint( 16 ) );
  try
  {
    p.validate();
  }
  catch ( arch_error const& e )
  {
    throw bitstream_error( std::string( "invalid-field: " ) + e.what() );
  }

  std::size_t const want = image_length( p );
  if ( image.size() < want )
    throw bitstream_error( "truncated-image: got " + std::to_string( image.size() ) +
                           " bytes, need " + std::to_string( want ) );
  if ( image.size() > want )
    throw bitstream_error( "trailing-garbage: got " + std::to_string( image.size() ) +
                           " bytes, expected " + std::to_string( want ) );

  auto const f = build_fabric( p );
  fabric_config cfg;
  cfg.params = p;

  for ( int i = 0; i < f.num_plbs(); ++i )
  {
    plb_config plb;
    for ( auto* le : { &plb.le_a, &plb.le_b } )
    {
      for ( int b = 0; b < 128; ++b )
        le->lut7.bits[b] = r.pull();
      for ( int b = 0; b < 4; ++b )
        le->lut2.bits[b] = r.pull();
    }
    plb.pde.k = int( r.pull_uint( 4 ) );
    for ( int s = 0; s < im_sink_count; ++s )
    {
      auto const sel = uint8_t( r.pull_uint( im_select_bits ) );
      if ( sel >= im_source_count )
        throw bitstream_error( "invalid-field: PLB " + std::to_string( i ) + " IM sink " +
                               std::to_string( s ) + " selects source " + std::to_string( sel ) );
      plb.im.selection[s] = sel;
    }
    if ( !r.align_zero() )
      throw bitstream_error( "invalid-field: nonzero pad bits in PLB frame " +
                             std::to_string( i ) );
    cfg.plbs.push_back( plb );
  }

  for ( auto const& sb : f.switch_boxes )
  {
    switch_box_bits bits;
    for ( int pair = 0; pair < sb_pair_count( sb.degree() ); ++pair )
    {
      std::vector<bool> tracks( p.channel_width );
      for ( int t = 0; t < p.channel_width; ++t )
        tracks[t] = r.pull();
      bits.pair_enable.push_back( std::move( tracks ) );
    }
    if ( !r.align_zero() )
      throw bitstream_error( "invalid-field: nonzero pad bits in switch-box frame" );
    cfg.sb_bits.push_back( std::move( bits ) );
  }

  for ( auto const& cb : f.connection_boxes )
  {
    connection_box_bits bits;
    auto const pins = cb_pin_codes( p, cb );
    for ( std::size_t pin = 0; pin < pins.size(); ++pin )
    {
      std::vector<bool> tracks( p.channel_width );
      for ( int t = 0; t < p.channel_width; ++t )
        tracks[t] = r.pull();
      bits.pin_enable.push_back( std::move( tracks ) );
    }
    if ( !pins.empty() && !r.align_zero() )
      throw bitstream_error( "invalid-field: nonzero pad bits in connection-box frame" );
    cfg.cb_bits.push_back( std::move( bits ) );
  }

  return cfg;
}

} // namespace afpga
