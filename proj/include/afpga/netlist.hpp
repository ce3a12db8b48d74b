// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file netlist.hpp
  \brief Technology-independent asynchronous gate netlists

  Netlists are exchanged in a line-oriented text format (`.anet`):

      module <name>
      port in|out <net>
      cell <inst> <KIND> <in...> -> <out>
      channel dualrail <name> <d.t> <d.f> <ack>
      channel bundled <name> <req> <ack> <data...>
      end

  `#` starts a comment, tokens are whitespace-separated.  Delay cells
  are written `PDEL(k)` with k in 0..15.

  Combinational cycles are legal only through the state-holding Muller
  cells C2 and C3; a cycle through stateless kinds only is rejected by
  check_netlist.
*/

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "diagnostics.hpp"

namespace afpga
{

enum class cell_kind : uint8_t
{
  buf,
  inv,
  and2,
  and3,
  or2,
  or3,
  or4,
  xor2,
  maj3,
  c2,
  c3,
  pdel
};

struct cell_kind_info
{
  std::string_view name;
  int arity;
  bool stateful;
};

inline cell_kind_info const& kind_info( cell_kind k )
{
  static constexpr cell_kind_info table[] = {
      { "BUF", 1, false },  { "INV", 1, false },  { "AND2", 2, false }, { "AND3", 3, false },
      { "OR2", 2, false },  { "OR3", 3, false },  { "OR4", 4, false },  { "XOR2", 2, false },
      { "MAJ3", 3, false }, { "C2", 2, true },    { "C3", 3, true },    { "PDEL", 1, false } };
  return table[int( k )];
}

/*! \brief Combinational function of a stateless kind (PDEL is identity). */
inline bool eval_stateless( cell_kind k, std::vector<bool> const& in )
{
  switch ( k )
  {
  case cell_kind::buf:
  case cell_kind::pdel: return in[0];
  case cell_kind::inv: return !in[0];
  case cell_kind::and2: return in[0] && in[1];
  case cell_kind::and3: return in[0] && in[1] && in[2];
  case cell_kind::or2: return in[0] || in[1];
  case cell_kind::or3: return in[0] || in[1] || in[2];
  case cell_kind::or4: return in[0] || in[1] || in[2] || in[3];
  case cell_kind::xor2: return in[0] != in[1];
  case cell_kind::maj3: return ( int( in[0] ) + int( in[1] ) + int( in[2] ) ) >= 2;
  default: throw std::logic_error( "eval_stateless on stateful kind" );
  }
}

/*! \brief Muller cell next-state: sets when all inputs are 1, clears when
 *         all are 0, otherwise holds \p y.
 */
inline bool eval_muller( std::vector<bool> const& in, bool y )
{
  bool all1 = true, all0 = true;
  for ( bool b : in )
  {
    all1 = all1 && b;
    all0 = all0 && !b;
  }
  return all1 || ( y && !all0 );
}

struct gate
{
  std::string name;
  cell_kind kind;
  int delay_code = 0; // PDEL only
  std::vector<std::string> inputs;
  std::string output;

  bool operator==( gate const& ) const = default;
};

struct port
{
  std::string net;
  bool is_input;

  bool operator==( port const& ) const = default;
};

enum class channel_kind : uint8_t
{
  dual_rail,
  bundled
};

/*! \brief Handshake grouping of ports.
 *
 * Dual-rail channels carry one bit on (rail_t, rail_f) with 00 as the
 * spacer; bundled channels carry single-rail data qualified by req.
 * The first listed data net is bit 0 of the decoded token value.
 */
struct channel
{
  std::string name;
  channel_kind kind;
  std::string ack;
  std::string rail_t, rail_f;     // dual_rail
  std::string req;                // bundled
  std::vector<std::string> data;  // bundled

  bool operator==( channel const& ) const = default;
};

struct netlist
{
  std::string name;
  std::vector<port> ports;
  std::vector<gate> gates;
  std::vector<channel> channels;

  bool operator==( netlist const& ) const = default;

  bool is_input_port( std::string_view net ) const
  {
    for ( auto const& p : ports )
      if ( p.net == net )
        return p.is_input;
    return false;
  }

  bool is_output_port( std::string_view net ) const
  {
    for ( auto const& p : ports )
      if ( p.net == net )
        return !p.is_input;
    return false;
  }

  bool is_port( std::string_view net ) const
  {
    for ( auto const& p : ports )
      if ( p.net == net )
        return true;
    return false;
  }

  /*! \brief Gate driving \p net, or nullptr (input ports have no gate driver). */
  gate const* driver_of( std::string_view net ) const
  {
    for ( auto const& g : gates )
      if ( g.output == net )
        return &g;
    return nullptr;
  }

  /*! \brief All nets referenced anywhere, in first-appearance order. */
  std::vector<std::string> all_nets() const
  {
    std::vector<std::string> nets;
    std::set<std::string> seen;
    auto add = [&]( std::string const& n ) {
      if ( seen.insert( n ).second )
        nets.push_back( n );
    };
    for ( auto const& p : ports )
      add( p.net );
    for ( auto const& g : gates )
    {
      for ( auto const& i : g.inputs )
        add( i );
      add( g.output );
    }
    return nets;
  }
};

class netlist_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/*! \brief Syntax error with the offending 1-based line number. */
class parse_error : public std::runtime_error
{
public:
  parse_error( int line, std::string const& what )
      : std::runtime_error( "line " + std::to_string( line ) + ": " + what ), line_( line )
  {
  }

  int line() const { return line_; }

private:
  int line_;
};

namespace detail
{

inline std::optional<cell_kind> parse_kind_token( std::string const& tok, int& delay_code )
{
  for ( int k = 0; k <= int( cell_kind::c3 ); ++k )
  {
    if ( tok == kind_info( cell_kind( k ) ).name )
      return cell_kind( k );
  }
  if ( tok.size() >= 7 && tok.rfind( "PDEL(", 0 ) == 0 && tok.back() == ')' )
  {
    std::string num = tok.substr( 5, tok.size() - 6 );
    if ( num.empty() || num.find_first_not_of( "0123456789" ) != std::string::npos )
      return std::nullopt;
    int const k = std::stoi( num );
    if ( k > 15 )
      return std::nullopt;
    delay_code = k;
    return cell_kind::pdel;
  }
  return std::nullopt;
}

inline std::vector<std::string> tokenize( std::string const& line )
{
  std::vector<std::string> toks;
  std::istringstream is( line );
  std::string t;
  while ( is >> t )
  {
    if ( t[0] == '#' )
      break;
    toks.push_back( t );
  }
  return toks;
}

} // namespace detail

/*! \brief Parses the `.anet` text format.  Semantic problems (multiple
 *         drivers, cycles, arities) are left to check_netlist.
 */
inline netlist parse_netlist( std::string const& text )
{
  netlist n;
  bool in_module = false;
  bool ended = false;

  std::istringstream is( text );
  std::string line;
  int lineno = 0;
  while ( std::getline( is, line ) )
  {
    ++lineno;
    auto toks = detail::tokenize( line );
    if ( toks.empty() )
      continue;
    if ( ended )
      throw parse_error( lineno, "content after 'end'" );

    auto const& head = toks[0];
    if ( head == "module" )
    {
      if ( in_module )
        throw parse_error( lineno, "nested 'module'" );
      if ( toks.size() != 2 )
        throw parse_error( lineno, "expected: module <name>" );
      n.name = toks[1];
      in_module = true;
      continue;
    }
    if ( !in_module )
      throw parse_error( lineno, "expected 'module' first" );

    if ( head == "end" )
    {
      if ( toks.size() != 1 )
        throw parse_error( lineno, "unexpected tokens after 'end'" );
      ended = true;
    }
    else if ( head == "port" )
    {
      if ( toks.size() != 3 || ( toks[1] != "in" && toks[1] != "out" ) )
        throw parse_error( lineno, "expected: port in|out <net>" );
      n.ports.push_back( { toks[2], toks[1] == "in" } );
    }
    else if ( head == "cell" )
    {
      auto arrow = std::find( toks.begin(), toks.end(), "->" );
      if ( toks.size() < 6 || arrow == toks.end() || arrow + 2 != toks.end() )
        throw parse_error( lineno, "expected: cell <inst> <KIND> <in...> -> <out>" );
      gate g;
      g.name = toks[1];
      int delay_code = 0;
      auto kind = detail::parse_kind_token( toks[2], delay_code );
      if ( !kind )
        throw parse_error( lineno, "unknown cell kind '" + toks[2] + "'" );
      g.kind = *kind;
      g.delay_code = delay_code;
      g.inputs.assign( toks.begin() + 3, arrow );
      if ( g.inputs.empty() )
        throw parse_error( lineno, "cell has no inputs" );
      g.output = *( arrow + 1 );
      n.gates.push_back( std::move( g ) );
    }
    else if ( head == "channel" )
    {
      if ( toks.size() < 3 )
        throw parse_error( lineno, "expected: channel dualrail|bundled <name> ..." );
      channel c;
      c.name = toks[2];
      if ( toks[1] == "dualrail" )
      {
        if ( toks.size() != 6 )
          throw parse_error( lineno, "expected: channel dualrail <name> <d.t> <d.f> <ack>" );
        c.kind = channel_kind::dual_rail;
        c.rail_t = toks[3];
        c.rail_f = toks[4];
        c.ack = toks[5];
      }
      else if ( toks[1] == "bundled" )
      {
        if ( toks.size() < 6 )
          throw parse_error( lineno, "expected: channel bundled <name> <req> <ack> <data...>" );
        c.kind = channel_kind::bundled;
        c.req = toks[3];
        c.ack = toks[4];
        c.data.assign( toks.begin() + 5, toks.end() );
      }
      else
      {
        throw parse_error( lineno, "unknown channel kind '" + toks[1] + "'" );
      }
      n.channels.push_back( std::move( c ) );
    }
    else
    {
      throw parse_error( lineno, "unknown directive '" + head + "'" );
    }
  }
  if ( !in_module )
    throw parse_error( lineno, "missing 'module'" );
  if ( !ended )
    throw parse_error( lineno, "missing 'end'" );
  return n;
}

inline std::string emit_netlist( netlist const& n )
{
  std::ostringstream os;
  os << "module " << n.name << "\n";
  for ( auto const& p : n.ports )
    os << "port " << ( p.is_input ? "in " : "out " ) << p.net << "\n";
  for ( auto const& g : n.gates )
  {
    os << "cell " << g.name << ' ';
    if ( g.kind == cell_kind::pdel )
      os << "PDEL(" << g.delay_code << ')';
    else
      os << kind_info( g.kind ).name;
    for ( auto const& i : g.inputs )
      os << ' ' << i;
    os << " -> " << g.output << "\n";
  }
  for ( auto const& c : n.channels )
  {
    if ( c.kind == channel_kind::dual_rail )
      os << "channel dualrail " << c.name << ' ' << c.rail_t << ' ' << c.rail_f << ' ' << c.ack
         << "\n";
    else
    {
      os << "channel bundled " << c.name << ' ' << c.req << ' ' << c.ack;
      for ( auto const& d : c.data )
        os << ' ' << d;
      os << "\n";
    }
  }
  os << "end\n";
  return os.str();
}

/*! \brief Well-formedness checks: one driver per net, no dangling gate
 *         inputs, correct arities, no cycles through stateless cells
 *         only, channel nets must be module ports.
 */
inline diagnostics check_netlist( netlist const& n )
{
  diagnostics diags;

  std::map<std::string, int> drivers;
  for ( auto const& p : n.ports )
    if ( p.is_input )
      drivers[p.net]++;
  for ( auto const& g : n.gates )
    drivers[g.output]++;

  for ( auto const& [net, count] : drivers )
  {
    if ( count > 1 )
      diags.push_back( { "multiple-drivers", "net '" + net + "' has " + std::to_string( count ) +
                                                 " drivers" } );
  }

  std::set<std::string> gate_names;
  for ( auto const& g : n.gates )
  {
    if ( !gate_names.insert( g.name ).second )
      diags.push_back( { "duplicate-cell", "instance '" + g.name + "' declared twice" } );
    int const want = kind_info( g.kind ).arity;
    if ( int( g.inputs.size() ) != want )
      diags.push_back( { "arity-mismatch", "cell '" + g.name + "' (" +
                                               std::string( kind_info( g.kind ).name ) + ") has " +
                                               std::to_string( g.inputs.size() ) + " inputs, needs " +
                                               std::to_string( want ) } );
    for ( auto const& in : g.inputs )
    {
      if ( drivers.find( in ) == drivers.end() )
        diags.push_back(
            { "dangling-input", "cell '" + g.name + "' input net '" + in + "' has no driver" } );
    }
  }

  for ( auto const& p : n.ports )
  {
    if ( !p.is_input && drivers.find( p.net ) == drivers.end() )
      diags.push_back( { "undriven-port", "output port '" + p.net + "' has no driver" } );
  }

  // stateless cycles: drop C2/C3 from the gate graph, any remaining cycle
  // is an error
  {
    std::map<std::string, int> gate_of_net; // driving gate index
    for ( int i = 0; i < int( n.gates.size() ); ++i )
      gate_of_net.emplace( n.gates[i].output, i );

    std::vector<int> state( n.gates.size(), 0 ); // 0 unvisited, 1 on stack, 2 done
    std::vector<int> stack, pos;
    bool reported = false;
    for ( int start = 0; start < int( n.gates.size() ) && !reported; ++start )
    {
      if ( state[start] != 0 || kind_info( n.gates[start].kind ).stateful )
        continue;
      stack = { start };
      pos = { 0 };
      state[start] = 1;
      while ( !stack.empty() && !reported )
      {
        int const g = stack.back();
        if ( pos.back() >= int( n.gates[g].inputs.size() ) )
        {
          state[g] = 2;
          stack.pop_back();
          pos.pop_back();
          continue;
        }
        auto it = gate_of_net.find( n.gates[g].inputs[pos.back()++] );
        if ( it == gate_of_net.end() )
          continue;
        int const next = it->second;
        if ( kind_info( n.gates[next].kind ).stateful || state[next] == 2 )
          continue;
        if ( state[next] == 1 )
        {
          diags.push_back( { "stateless-cycle", "combinational cycle through cell '" +
                                                    n.gates[next].name +
                                                    "' contains no C2/C3" } );
          reported = true;
          continue;
        }
        state[next] = 1;
        stack.push_back( next );
        pos.push_back( 0 );
      }
    }
  }

  for ( auto const& c : n.channels )
  {
    std::vector<std::string> nets;
    if ( c.kind == channel_kind::dual_rail )
      nets = { c.rail_t, c.rail_f, c.ack };
    else
    {
      nets = { c.req, c.ack };
      nets.insert( nets.end(), c.data.begin(), c.data.end() );
    }
    for ( auto const& net : nets )
    {
      if ( !n.is_port( net ) )
        diags.push_back( { "channel-net-not-port",
                           "channel '" + c.name + "' references non-port net '" + net + "'" } );
    }
  }

  return diags;
}

// ---------------------------------------------------------------------------
// Built-in reference designs
// ---------------------------------------------------------------------------

struct builtin_options
{
  /*! \brief Delay code for designs with a PDEL cell; -1 keeps the default
   *         (8 for fa_micropipeline, 3 for glitch_demo). */
  int delay_code = -1;
};

namespace detail
{

inline netlist make_c_element()
{
  netlist n;
  n.name = "c_element";
  n.ports = { { "a", true }, { "b", true }, { "y", false } };
  n.gates.push_back( { "u1", cell_kind::c2, 0, { "a", "b" }, "y" } );
  return n;
}

/* DIMS dual-rail full adder: one C3 per operand minterm, one OR4 per
 * output rail.  The three input channels share one environment-driven
 * acknowledge. */
inline netlist make_fa_qdi()
{
  netlist n;
  n.name = "fa_qdi";
  for ( auto base : { "a", "b", "cin" } )
  {
    n.ports.push_back( { std::string( base ) + "_t", true } );
    n.ports.push_back( { std::string( base ) + "_f", true } );
  }
  n.ports.push_back( { "ack_in", true } );
  n.ports.push_back( { "ack_sum", true } );
  n.ports.push_back( { "ack_cout", true } );
  for ( auto base : { "sum", "cout" } )
  {
    n.ports.push_back( { std::string( base ) + "_t", false } );
    n.ports.push_back( { std::string( base ) + "_f", false } );
  }

  auto rail = []( char const* base, int bit ) {
    return std::string( base ) + ( bit ? "_t" : "_f" );
  };
  for ( int v = 0; v < 8; ++v )
  {
    int const a = v & 1, b = ( v >> 1 ) & 1, c = ( v >> 2 ) & 1;
    std::string suffix = std::to_string( a ) + std::to_string( b ) + std::to_string( c );
    n.gates.push_back( { "c" + suffix, cell_kind::c3, 0,
                         { rail( "a", a ), rail( "b", b ), rail( "cin", c ) }, "m" + suffix } );
  }
  auto minterms = []( auto pred ) {
    std::vector<std::string> nets;
    for ( int v = 0; v < 8; ++v )
    {
      int const a = v & 1, b = ( v >> 1 ) & 1, c = ( v >> 2 ) & 1;
      if ( pred( a, b, c ) )
        nets.push_back( "m" + std::to_string( a ) + std::to_string( b ) + std::to_string( c ) );
    }
    return nets;
  };
  n.gates.push_back( { "osum_t", cell_kind::or4, 0,
                       minterms( []( int a, int b, int c ) { return ( a ^ b ^ c ) == 1; } ),
                       "sum_t" } );
  n.gates.push_back( { "osum_f", cell_kind::or4, 0,
                       minterms( []( int a, int b, int c ) { return ( a ^ b ^ c ) == 0; } ),
                       "sum_f" } );
  n.gates.push_back( { "ocout_t", cell_kind::or4, 0,
                       minterms( []( int a, int b, int c ) { return a + b + c >= 2; } ),
                       "cout_t" } );
  n.gates.push_back( { "ocout_f", cell_kind::or4, 0,
                       minterms( []( int a, int b, int c ) { return a + b + c < 2; } ),
                       "cout_f" } );

  n.channels.push_back( { "a", channel_kind::dual_rail, "ack_in", "a_t", "a_f", "", {} } );
  n.channels.push_back( { "b", channel_kind::dual_rail, "ack_in", "b_t", "b_f", "", {} } );
  n.channels.push_back( { "cin", channel_kind::dual_rail, "ack_in", "cin_t", "cin_f", "", {} } );
  n.channels.push_back( { "sum", channel_kind::dual_rail, "ack_sum", "sum_t", "sum_f", "", {} } );
  n.channels.push_back(
      { "cout", channel_kind::dual_rail, "ack_cout", "cout_t", "cout_f", "", {} } );
  return n;
}

/* Bundled-data single-rail adder; the request is matched against the
 * data path by a PDEL and the acknowledge passes straight through. */
inline netlist make_fa_micropipeline( int k )
{
  netlist n;
  n.name = "fa_micropipeline";
  n.ports = { { "req_in", true },  { "a", true },   { "b", true },    { "cin", true },
              { "ack", true },     { "req_out", false }, { "sum", false }, { "cout", false } };
  n.gates.push_back( { "u_x1", cell_kind::xor2, 0, { "a", "b" }, "x1" } );
  n.gates.push_back( { "u_sum", cell_kind::xor2, 0, { "x1", "cin" }, "sum" } );
  n.gates.push_back( { "u_cout", cell_kind::maj3, 0, { "a", "b", "cin" }, "cout" } );
  n.gates.push_back( { "u_dly", cell_kind::pdel, k, { "req_in" }, "req_out" } );
  n.channels.push_back(
      { "in_ch", channel_kind::bundled, "ack", "", "", "req_in", { "a", "b", "cin" } } );
  n.channels.push_back(
      { "out_ch", channel_kind::bundled, "ack", "", "", "req_out", { "sum", "cout" } } );
  return n;
}

/* XOR fed by two reconvergent paths of unequal depth: a PDEL on one arm
 * against two buffers on the other.  k = 4 matches the buffer path under
 * nominal delays; k = 3 skews the arms by one unit and provokes a pulse. */
inline netlist make_glitch_demo( int k )
{
  netlist n;
  n.name = "glitch_demo";
  n.ports = { { "a", true }, { "y", false } };
  n.gates.push_back( { "u_dly", cell_kind::pdel, k, { "a" }, "x1" } );
  n.gates.push_back( { "u_b1", cell_kind::buf, 0, { "a" }, "w1" } );
  n.gates.push_back( { "u_b2", cell_kind::buf, 0, { "w1" }, "x2" } );
  n.gates.push_back( { "u_xor", cell_kind::xor2, 0, { "x1", "x2" }, "y" } );
  return n;
}

} // namespace detail

inline std::vector<std::string> const& builtin_names()
{
  static std::vector<std::string> const names = { "c_element", "fa_qdi", "fa_micropipeline",
                                                  "glitch_demo" };
  return names;
}

/*! \brief Returns a generated reference design by name.
 *
 * Throws netlist_error for an unknown name or an out-of-range delay code.
 */
inline netlist make_builtin( std::string const& name, builtin_options opts = {} )
{
  auto pick = [&]( int fallback ) {
    int const k = opts.delay_code < 0 ? fallback : opts.delay_code;
    if ( k > 15 )
      throw netlist_error( "delay code out of range: " + std::to_string( k ) );
    return k;
  };
  if ( name == "c_element" )
    return detail::make_c_element();
  if ( name == "fa_qdi" )
    return detail::make_fa_qdi();
  if ( name == "fa_micropipeline" )
    return detail::make_fa_micropipeline( pick( 8 ) );
  if ( name == "glitch_demo" )
    return detail::make_glitch_demo( pick( 3 ) );
  throw netlist_error( "unknown-builtin: '" + name + "'" );
}

} // namespace afpga
