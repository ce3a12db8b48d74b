// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file sim.hpp
  \brief Deterministic event-driven simulation of netlists and fabrics

  A sim_model is a flat graph of three node kinds: sources (testbench
  drivers and constants), evaluators (LUT-like functions with inertial
  output delay) and transports (wires, interconnection-matrix hops and
  delay elements, which propagate every transition).

  Nominal delays: evaluators 2 units, interconnection-matrix hops 1,
  wire segments 1, delay elements their programmed k.  Randomized mode
  redraws every non-source node's delay uniformly from [1, d_max];
  evaluators stay inertial.

  The engine pops all events of one timestamp, applies them, then
  evaluates each affected node once, so simultaneous arrivals cause no
  spurious transitions.  An inertial node that computes the opposite of
  its pending transition cancels it and records an absorbed-pulse
  hazard.

  Testbenches drive channels with the 4-phase return-to-zero discipline
  and respond one unit after the edges they observe.  An input channel
  whose acknowledge net nothing drives is acknowledged by the
  environment with a virtual C-element over all output-channel
  acknowledges.  Token sequences are decoded from the trace afterwards:
  dual-rail values at validity onset with spacers enforced, bundled data
  sampled at request rise.

  All signals initialize to 0; runs are pure functions of (model,
  testbench, delay model).
*/

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "arch.hpp"
#include "bitstream.hpp"
#include "mapper.hpp"
#include "netlist.hpp"
#include "pnr.hpp"

namespace afpga
{

class sim_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Delay model
// ---------------------------------------------------------------------------

struct delay_model
{
  bool randomized = false;
  uint32_t seed = 0;
  int d_max = 10;

  static delay_model nominal() { return {}; }

  static delay_model random( uint32_t seed, int d_max = 10 )
  {
    return { true, seed, d_max };
  }
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct sim_model
{
  enum class node_kind : uint8_t
  {
    source,
    evaluator,
    transport
  };

  struct node
  {
    node_kind kind;
    std::string name;
    std::vector<int> fanin;
    small_truth_table table; // evaluator only
    int delay = 0;           // nominal units
    bool initial = false;    // initial value (constant-1 sources)
  };

  std::vector<node> nodes;
  std::vector<std::vector<int>> fanout;

  int node_of( std::string_view name ) const
  {
    for ( std::size_t i = 0; i < nodes.size(); ++i )
      if ( nodes[i].name == name )
        return int( i );
    return -1;
  }

  void build_fanout()
  {
    fanout.assign( nodes.size(), {} );
    for ( std::size_t i = 0; i < nodes.size(); ++i )
      for ( int in : nodes[i].fanin )
        fanout[in].push_back( int( i ) );
  }
};

namespace detail
{

/*! \brief Rejects cycles made of zero-delay nodes only. */
inline void check_zero_delay_cycles( sim_model const& m )
{
  std::vector<int> state( m.nodes.size(), 0 );
  for ( std::size_t start = 0; start < m.nodes.size(); ++start )
  {
    if ( state[start] != 0 || m.nodes[start].delay != 0 ||
         m.nodes[start].kind == sim_model::node_kind::source )
      continue;
    std::vector<std::pair<int, std::size_t>> stack = { { int( start ), 0 } };
    state[start] = 1;
    while ( !stack.empty() )
    {
      auto& [id, pos] = stack.back();
      if ( pos >= m.nodes[id].fanin.size() )
      {
        state[id] = 2;
        stack.pop_back();
        continue;
      }
      int const next = m.nodes[id].fanin[pos++];
      if ( m.nodes[next].delay != 0 || m.nodes[next].kind == sim_model::node_kind::source ||
           state[next] == 2 )
        continue;
      if ( state[next] == 1 )
        throw sim_error( "zero-delay-cycle: through '" + m.nodes[next].name + "'" );
      state[next] = 1;
      stack.push_back( { next, 0 } );
    }
  }
}

} // namespace detail

/*! \brief Builds an evaluable model from a checked netlist: one inertial
 *         evaluator per logic cell (Muller cells loop through their own
 *         node), one transport per delay cell, one source per input port.
 */
inline sim_model elaborate_netlist( netlist const& n )
{
  if ( auto diags = check_netlist( n ); !diags.empty() )
    throw sim_error( "invalid-netlist: " + diags.front().code + ", " + diags.front().message );

  sim_model m;
  std::map<std::string, int> driver;
  for ( auto const& p : n.ports )
  {
    if ( !p.is_input )
      continue;
    driver[p.net] = int( m.nodes.size() );
    m.nodes.push_back( { sim_model::node_kind::source, p.net, {}, {}, 0, false } );
  }
  auto const funcs = tech_map( n );
  std::map<std::string, le_function const*> func_of;
  for ( auto const& f : funcs )
    func_of[f.output] = &f;
  for ( auto const& g : n.gates )
  {
    driver[g.output] = int( m.nodes.size() );
    if ( g.kind == cell_kind::pdel )
      m.nodes.push_back(
          { sim_model::node_kind::transport, g.output, {}, {}, g.delay_code, false } );
    else
      m.nodes.push_back( { sim_model::node_kind::evaluator, g.output, {},
                           func_of.at( g.output )->table, 2, false } );
  }
  for ( auto const& g : n.gates )
  {
    auto& node = m.nodes[driver.at( g.output )];
    if ( g.kind == cell_kind::pdel )
    {
      node.fanin = { driver.at( g.inputs[0] ) };
      continue;
    }
    auto const& f = *func_of.at( g.output );
    for ( auto const& in : f.inputs )
      node.fanin.push_back( driver.at( in ) );
    if ( f.feedback )
      node.fanin.push_back( driver.at( g.output ) );
  }
  m.build_fanout();
  detail::check_zero_delay_cycles( m );
  return m;
}

/*! \brief Flattens a packing into an evaluable model (no placement or
 *         routing), for checking that packing preserved behavior.
 */
inline sim_model elaborate_packing( packing const& p )
{
  sim_model m;
  std::map<std::string, int> driver;
  for ( auto const& port : p.source.ports )
  {
    if ( !port.is_input )
      continue;
    driver[port.net] = int( m.nodes.size() );
    m.nodes.push_back( { sim_model::node_kind::source, port.net, {}, {}, 0, false } );
  }
  for ( auto const& f : p.funcs )
  {
    driver[f.output] = int( m.nodes.size() );
    m.nodes.push_back( { sim_model::node_kind::evaluator, f.output, {}, f.table, 2, false } );
  }
  for ( auto const& g : p.source.gates )
  {
    if ( g.kind != cell_kind::pdel )
      continue;
    driver[g.output] = int( m.nodes.size() );
    m.nodes.push_back(
        { sim_model::node_kind::transport, g.output, {}, {}, g.delay_code, false } );
  }
  for ( auto const& f : p.funcs )
  {
    auto& node = m.nodes[driver.at( f.output )];
    for ( auto const& in : f.inputs )
      node.fanin.push_back( driver.at( in ) );
    if ( f.feedback )
      node.fanin.push_back( driver.at( f.output ) );
  }
  for ( auto const& g : p.source.gates )
    if ( g.kind == cell_kind::pdel )
      m.nodes[driver.at( g.output )].fanin = { driver.at( g.inputs[0] ) };
  m.build_fanout();
  detail::check_zero_delay_cycles( m );
  return m;
}

// ---------------------------------------------------------------------------
// Fabric elaboration
// ---------------------------------------------------------------------------

/*! \brief Where module ports touch the fabric: testbench-driven input
 *         pins and the output pins where port nets are observed.
 */
struct port_binding
{
  std::map<std::string, std::vector<std::pair<int, int>>> inputs; // net -> (plb, in pin)
  std::map<std::string, std::pair<int, int>> outputs;             // net -> (plb, out pin)
};

/*! \brief Builds an evaluable model of a configured, routed fabric.
 *
 * Only reachable structure is modeled: LE taps some interconnection
 * matrix selects, the sinks those taps read, delay elements whose
 * output is consumed, routed wires, and bound ports.  Signal names
 * follow the structure (plb0.a.o1, plb0.pde, net.h1_0.t3); port nets
 * keep their own names at the binding points so testbenches and token
 * extraction work unchanged between netlist and fabric mode.
 */
inline sim_model elaborate_fabric( fabric const& f, fabric_config const& cfg, routes const& r,
                                   port_binding const& ports )
{
  if ( auto diags = validate_fabric_config( cfg ); !diags.empty() )
    throw sim_error( "invalid-config: " + diags.front().message );
  for ( std::size_t i = 0; i < cfg.plbs.size(); ++i )
  {
    for ( auto const& d : validate_plb_config( cfg.plbs[i] ) )
    {
      if ( d.code == "zero-delay-loop" )
        throw sim_error( "zero-delay-cycle: PLB " + std::to_string( i ) + ": " + d.message );
      throw sim_error( "invalid-config: PLB " + std::to_string( i ) + ": " + d.message );
    }
  }

  auto const g = build_routing_graph( f );

  // net names for driven output pins
  std::map<std::pair<int, int>, std::string> outpin_net;
  for ( auto const& tree : r.nets )
  {
    auto const& node = g.nodes[tree.driver];
    outpin_net[{ node.plb, node.pin }] = tree.net;
  }
  for ( auto const& [net, at] : ports.outputs )
    outpin_net[at] = net;

  // which taps, sinks and delay elements are reachable, per PLB
  struct plb_use
  {
    std::array<std::array<bool, 4>, 2> tap{};  // [le][o0,o1,o2,v]
    std::array<bool, im_sink_count> sink{};
    bool pde = false;
  };
  std::vector<plb_use> use( f.num_plbs() );
  for ( int id = 0; id < f.num_plbs(); ++id )
  {
    auto& u = use[id];
    auto const& sel = cfg.plbs[id].im.selection;
    for ( int pin = 0; pin < f.params.plb_outputs; ++pin )
      u.sink[im_sink::plb_output( pin ).index] =
          im_source{ sel[im_sink::plb_output( pin ).index] } != im_source::const0();
    bool grew = true;
    while ( grew )
    {
      grew = false;
      auto mark_tap = [&]( int le, int slot ) {
        if ( u.tap[le][slot] )
          return;
        u.tap[le][slot] = true;
        grew = true;
        int const arity = slot == 0 ? 7 : ( slot == 3 ? 0 : 6 );
        for ( int pos = 0; pos < arity; ++pos )
          u.sink[im_sink::le_input( le, pos ).index] = true;
      };
      for ( int s = 0; s < im_sink_count; ++s )
      {
        if ( !u.sink[s] )
          continue;
        im_source const src{ cfg.plbs[id].im.selection[s] };
        if ( src.is_le_output() )
        {
          mark_tap( src.le(), src.le_slot() );
          if ( src.le_slot() == 3 )
          {
            mark_tap( src.le(), 1 );
            mark_tap( src.le(), 2 );
          }
        }
        else if ( src.is_pde_out() && !u.pde )
        {
          u.pde = true;
          u.sink[im_sink::pde_in().index] = true;
          grew = true;
        }
      }
      // the v tap reads the half taps through the hard LUT2 path
      for ( int le = 0; le < 2; ++le )
      {
        if ( u.tap[le][3] && ( !u.tap[le][1] || !u.tap[le][2] ) )
        {
          mark_tap( le, 1 );
          mark_tap( le, 2 );
        }
      }
    }
  }

  sim_model m;
  auto add_node = [&]( sim_model::node_kind kind, std::string name, int delay,
                       bool initial = false ) {
    m.nodes.push_back( { kind, std::move( name ), {}, {}, delay, initial } );
    return int( m.nodes.size() ) - 1;
  };

  int const const0 = add_node( sim_model::node_kind::source, "const0", 0, false );
  int const const1 = add_node( sim_model::node_kind::source, "const1", 0, true );

  std::map<std::string, int> tb_source;
  for ( auto const& [net, pins] : ports.inputs )
    tb_source[net] = add_node( sim_model::node_kind::source, net, 0 );

  // node ids per structural element
  std::vector<std::array<std::array<int, 4>, 2>> tap_node( f.num_plbs(),
                                                           { { { -1, -1, -1, -1 },
                                                               { -1, -1, -1, -1 } } } );
  std::vector<std::array<int, im_sink_count>> sink_node( f.num_plbs() );
  std::vector<int> pde_node( f.num_plbs(), -1 );
  std::map<std::pair<int, int>, int> inpin_node;
  for ( auto& row : sink_node )
    row.fill( -1 );

  auto le_letter = []( int le ) { return le == 0 ? "a" : "b"; };
  static constexpr char const* tap_names[4] = { "o0", "o1", "o2", "v" };

  for ( int id = 0; id < f.num_plbs(); ++id )
  {
    auto const& u = use[id];
    std::string const prefix = "plb" + std::to_string( id ) + ".";
    for ( int le = 0; le < 2; ++le )
      for ( int slot = 0; slot < 4; ++slot )
        if ( u.tap[le][slot] )
          tap_node[id][le][slot] = add_node( sim_model::node_kind::evaluator,
                                             prefix + le_letter( le ) + "." + tap_names[slot],
                                             2 );
    if ( u.pde )
      pde_node[id] = add_node( sim_model::node_kind::transport, prefix + "pde",
                               cfg.plbs[id].pde.k );
    for ( int s = 0; s < im_sink_count; ++s )
    {
      if ( !u.sink[s] )
        continue;
      im_sink const sink{ uint8_t( s ) };
      std::string name;
      if ( sink.is_le_input() )
        name = prefix + le_letter( sink.le() ) + ".i" + std::to_string( sink.le_pos() );
      else if ( sink.is_pde_in() )
        name = prefix + "pde_in";
      else
      {
        auto it = outpin_net.find( { id, sink.output_pin() } );
        name = it != outpin_net.end() ? it->second
                                      : prefix + "out" + std::to_string( sink.output_pin() );
      }
      sink_node[id][s] = add_node( sim_model::node_kind::transport, name, 1 );
    }
  }

  // routed wires: segments and sink input pins, tree order
  std::map<int, int> graph_to_model; // routing-graph node -> model node
  for ( auto const& tree : r.nets )
  {
    auto const& drv = g.nodes[tree.driver];
    int const drv_model = sink_node[drv.plb][im_sink::plb_output( drv.pin ).index];
    if ( drv_model < 0 )
      throw sim_error( "invalid-config: net '" + tree.net +
                       "' routed from an unprogrammed output pin" );
    graph_to_model[tree.driver] = drv_model;
    for ( auto const& [from, to] : tree.arcs )
    {
      auto const& node = g.nodes[to];
      int model_id;
      if ( node.kind == routing_graph::node_kind::segment )
        model_id = add_node( sim_model::node_kind::transport,
                             tree.net + "." + f.group_name( node.group ) + ".t" +
                                 std::to_string( node.track ),
                             1 );
      else if ( node.kind == routing_graph::node_kind::input_pin )
      {
        model_id = add_node( sim_model::node_kind::transport,
                             "plb" + std::to_string( node.plb ) + ".in" +
                                 std::to_string( node.pin ),
                             0 );
        inpin_node[{ node.plb, node.pin }] = model_id;
      }
      else
        throw sim_error( "invalid-config: route for net '" + tree.net +
                         "' passes through an output pin" );
      graph_to_model[to] = model_id;
      m.nodes[model_id].fanin = { graph_to_model.at( from ) };
    }
  }

  // testbench-driven input pins
  for ( auto const& [net, pins] : ports.inputs )
  {
    for ( auto const& at : pins )
    {
      if ( inpin_node.count( at ) )
        throw sim_error( "invalid-config: input pin plb" + std::to_string( at.first ) + ".in" +
                         std::to_string( at.second ) + " both routed and port-bound" );
      int const id = add_node( sim_model::node_kind::transport,
                               "plb" + std::to_string( at.first ) + ".in" +
                                   std::to_string( at.second ),
                               0 );
      m.nodes[id].fanin = { tb_source.at( net ) };
      inpin_node[at] = id;
    }
  }

  // wire the interconnection matrix sinks and LE taps
  for ( int id = 0; id < f.num_plbs(); ++id )
  {
    auto const& u = use[id];
    auto const& plb = cfg.plbs[id];
    auto source_node = [&]( im_source src ) {
      if ( src.is_const() )
        return src.const_value() ? const1 : const0;
      if ( src.is_pde_out() )
        return pde_node[id];
      if ( src.is_le_output() )
        return tap_node[id][src.le()][src.le_slot()];
      auto it = inpin_node.find( { id, src.input_pin() } );
      if ( it != inpin_node.end() )
        return it->second;
      // nothing drives this pin: stuck at 0
      int const stuck = add_node( sim_model::node_kind::source,
                                  "plb" + std::to_string( id ) + ".in" +
                                      std::to_string( src.input_pin() ),
                                  0 );
      inpin_node[{ id, src.input_pin() }] = stuck;
      return stuck;
    };

    for ( int s = 0; s < im_sink_count; ++s )
    {
      if ( sink_node[id][s] < 0 )
        continue;
      int const src = source_node( im_resolve( plb.im, s ) );
      if ( src < 0 )
        throw sim_error( "invalid-config: PLB " + std::to_string( id ) + " sink " +
                         std::to_string( s ) + " reads an unprogrammed element" );
      m.nodes[sink_node[id][s]].fanin = { src };
    }

    for ( int le = 0; le < 2; ++le )
    {
      auto const& lut = plb.le( le );
      for ( int slot = 0; slot < 3; ++slot )
      {
        int const id_tap = tap_node[id][le][slot];
        if ( id_tap < 0 )
          continue;
        auto& node = m.nodes[id_tap];
        int const arity = slot == 0 ? 7 : 6;
        for ( int pos = 0; pos < arity; ++pos )
          node.fanin.push_back( sink_node[id][im_sink::le_input( le, pos ).index] );
        node.table.num_inputs = arity;
        for ( int row = 0; row < ( 1 << arity ); ++row )
          node.table.bits[row] = lut.lut7.bits[slot == 2 ? 64 + row : row];
      }
      if ( int const id_v = tap_node[id][le][3]; id_v >= 0 )
      {
        auto& node = m.nodes[id_v];
        node.fanin = { tap_node[id][le][1], tap_node[id][le][2] };
        node.table.num_inputs = 2;
        for ( int row = 0; row < 4; ++row )
          node.table.bits[row] = lut.lut2.bits[row];
      }
    }
    if ( pde_node[id] >= 0 )
      m.nodes[pde_node[id]].fanin = { sink_node[id][im_sink::pde_in().index] };
  }

  m.build_fanout();
  detail::check_zero_delay_cycles( m );
  return m;
}

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

struct hazard_record
{
  std::string signal;
  uint64_t time;
  std::string kind; // "absorbed-pulse"
};

struct trace
{
  struct change
  {
    uint64_t time;
    uint64_t seq;
    int signal;
    bool value;
  };

  std::vector<std::string> signals;
  std::vector<bool> initial;
  std::vector<change> changes;
  std::vector<hazard_record> hazards;
  bool timed_out = false;
  uint64_t end_time = 0;
};

/*! \brief Signal value after all changes up to and including \p time. */
inline bool value_at( trace const& t, std::string_view signal, uint64_t time )
{
  int idx = -1;
  for ( std::size_t i = 0; i < t.signals.size(); ++i )
    if ( t.signals[i] == signal )
      idx = int( i );
  if ( idx < 0 )
    throw sim_error( "unknown signal '" + std::string( signal ) + "'" );
  bool value = t.initial[idx];
  for ( auto const& c : t.changes )
  {
    if ( c.time > time )
      break;
    if ( c.signal == idx )
      value = c.value;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Testbench
// ---------------------------------------------------------------------------

/*! \brief Channel scripts plus raw waveform stimuli.
 *
 * Producers drive each input channel through 4-phase cycles with the
 * values scripted for it; consumers acknowledge every output channel.
 * Raw stimuli set source nets at fixed times, for channel-less designs.
 */
struct testbench
{
  struct stimulus
  {
    uint64_t time;
    std::string net;
    bool value;
  };

  std::vector<channel> channels;
  std::vector<port> ports;
  std::map<std::string, std::vector<uint64_t>> scripts;
  std::vector<stimulus> waveform;
  uint64_t timeout = 100000;

  bool is_input_channel( channel const& c ) const
  {
    std::string const& probe = c.kind == channel_kind::dual_rail ? c.rail_t : c.req;
    for ( auto const& p : ports )
      if ( p.net == probe )
        return p.is_input;
    return false;
  }
};

/*! \brief Testbench feeding every input channel \p tokens values.
 *
 * Token i carries bit (i >> position) for dual-rail channel number
 * `position`, and the low data-width bits of i for a bundled channel,
 * so a design with single-bit channels sees every input combination
 * when tokens is a power of two.  A design without input channels gets
 * a pulse on each input port instead.
 */
inline testbench make_default_testbench( netlist const& n, int tokens = 8 )
{
  testbench tb;
  tb.channels = n.channels;
  tb.ports = n.ports;
  int position = 0;
  for ( auto const& c : n.channels )
  {
    if ( !tb.is_input_channel( c ) )
      continue;
    std::vector<uint64_t> script;
    for ( int i = 0; i < tokens; ++i )
    {
      if ( c.kind == channel_kind::dual_rail )
        script.push_back( ( uint64_t( i ) >> position ) & 1 );
      else
        script.push_back( uint64_t( i ) & ( ( uint64_t( 1 ) << c.data.size() ) - 1 ) );
    }
    tb.scripts[c.name] = std::move( script );
    ++position;
  }
  if ( tb.scripts.empty() )
  {
    uint64_t at = 10;
    for ( auto const& p : n.ports )
    {
      if ( !p.is_input )
        continue;
      tb.waveform.push_back( { at, p.net, true } );
      tb.waveform.push_back( { at + 10, p.net, false } );
      at += 20;
    }
  }
  return tb;
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

inline trace run( sim_model const& m, testbench const& tb, delay_model const& d,
                  uint64_t t_max )
{
  // per-run state
  std::vector<int> delay( m.nodes.size() );
  {
    std::mt19937 rng( d.seed );
    for ( std::size_t i = 0; i < m.nodes.size(); ++i )
    {
      if ( m.nodes[i].kind == sim_model::node_kind::source )
        delay[i] = 0;
      else if ( d.randomized )
        delay[i] = 1 + int( rng() % uint32_t( d.d_max ) );
      else
        delay[i] = m.nodes[i].delay;
    }
  }

  std::vector<char> value( m.nodes.size() );
  for ( std::size_t i = 0; i < m.nodes.size(); ++i )
    value[i] = m.nodes[i].initial;

  trace out;
  out.signals.reserve( m.nodes.size() );
  for ( auto const& node : m.nodes )
    out.signals.push_back( node.name );
  out.initial.assign( value.begin(), value.end() );

  struct event
  {
    uint64_t time;
    uint64_t seq;
    int node;
    bool val;
    bool operator>( event const& o ) const
    {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };
  std::priority_queue<event, std::vector<event>, std::greater<>> queue;
  uint64_t seq_counter = 0;
  auto schedule = [&]( uint64_t time, int node, bool val ) {
    queue.push( { time, seq_counter++, node, val } );
    return seq_counter - 1;
  };

  std::vector<int64_t> pending_seq( m.nodes.size(), -1 ); // inertial nodes
  std::vector<char> pending_value( m.nodes.size(), 0 );
  std::vector<char> last_scheduled( m.nodes.size() );
  for ( std::size_t i = 0; i < m.nodes.size(); ++i )
    last_scheduled[i] = value[i];

  auto evaluate = [&]( int id, uint64_t now ) {
    auto const& node = m.nodes[id];
    bool target;
    if ( node.kind == sim_model::node_kind::transport )
    {
      target = value[node.fanin[0]];
      if ( target != bool( last_scheduled[id] ) )
      {
        schedule( now + delay[id], id, target );
        last_scheduled[id] = target;
      }
      return;
    }
    uint8_t row = 0;
    for ( std::size_t j = 0; j < node.fanin.size(); ++j )
      if ( value[node.fanin[j]] )
        row |= uint8_t( 1u << j );
    target = node.table.eval( row );
    if ( pending_seq[id] >= 0 )
    {
      if ( bool( pending_value[id] ) != target )
      {
        pending_seq[id] = -1; // absorbed pulse
        out.hazards.push_back( { node.name, now, "absorbed-pulse" } );
      }
      return;
    }
    if ( target != bool( value[id] ) )
    {
      pending_seq[id] = int64_t( schedule( now + delay[id], id, target ) );
      pending_value[id] = target;
    }
  };

  // settle paths fed by constants before any stimulus
  for ( std::size_t i = 0; i < m.nodes.size(); ++i )
    if ( m.nodes[i].kind != sim_model::node_kind::source )
      evaluate( int( i ), 0 );

  // testbench machines -------------------------------------------------
  struct producer
  {
    channel const* ch;
    std::vector<uint64_t> script;
    std::size_t next = 0;
    int phase = 0; // 0 assert, 1 wait ack rise, 2 wait ack fall, 3 done
    bool last_ack = false;
  };
  struct consumer
  {
    channel const* ch;
    int ack_node = -1;
    bool last_in = false; // validity / req state
  };
  std::vector<producer> producers;
  std::vector<consumer> consumers;
  std::vector<int> env_ack_watch; // consumer ack node ids
  std::vector<int> env_ack_drive; // virtual C-element outputs
  bool env_ack_state = false;

  std::set<std::string> consumer_acks;
  for ( auto const& c : tb.channels )
    if ( !tb.is_input_channel( c ) )
      consumer_acks.insert( c.ack );

  for ( auto const& c : tb.channels )
  {
    if ( tb.is_input_channel( c ) )
    {
      producer p;
      p.ch = &c;
      if ( auto it = tb.scripts.find( c.name ); it != tb.scripts.end() )
        p.script = it->second;
      if ( !p.script.empty() )
        producers.push_back( std::move( p ) );
    }
    else
    {
      consumer co;
      co.ch = &c;
      int const id = m.node_of( c.ack );
      if ( id >= 0 && m.nodes[id].kind == sim_model::node_kind::source )
        co.ack_node = id;
      consumers.push_back( co );
    }
  }
  for ( auto const& co : consumers )
    if ( co.ack_node >= 0 )
      env_ack_watch.push_back( co.ack_node );
  {
    // producer ack nets nothing drives get the virtual environment ack
    std::set<int> drives;
    for ( auto const& p : producers )
    {
      int const id = m.node_of( p.ch->ack );
      if ( id < 0 || m.nodes[id].kind != sim_model::node_kind::source )
        continue;
      if ( consumer_acks.count( p.ch->ack ) )
        continue;
      drives.insert( id );
    }
    env_ack_drive.assign( drives.begin(), drives.end() );
  }

  auto net_node = [&]( std::string const& net ) {
    int const id = m.node_of( net );
    if ( id < 0 )
      throw sim_error( "testbench references unknown signal '" + net + "'" );
    return id;
  };
  auto net_value = [&]( std::string const& net ) { return bool( value[net_node( net )] ); };

  auto assert_token = [&]( producer& p, uint64_t at ) {
    uint64_t const v = p.script[p.next];
    if ( p.ch->kind == channel_kind::dual_rail )
    {
      schedule( at, net_node( v ? p.ch->rail_t : p.ch->rail_f ), true );
    }
    else
    {
      for ( std::size_t bit = 0; bit < p.ch->data.size(); ++bit )
        if ( ( v >> bit ) & 1 )
          schedule( at, net_node( p.ch->data[bit] ), true );
      schedule( at, net_node( p.ch->req ), true );
    }
    p.phase = 1;
  };
  auto retire_token = [&]( producer& p, uint64_t at ) {
    uint64_t const v = p.script[p.next];
    if ( p.ch->kind == channel_kind::dual_rail )
    {
      schedule( at, net_node( v ? p.ch->rail_t : p.ch->rail_f ), false );
    }
    else
    {
      for ( std::size_t bit = 0; bit < p.ch->data.size(); ++bit )
        if ( ( v >> bit ) & 1 )
          schedule( at, net_node( p.ch->data[bit] ), false );
      schedule( at, net_node( p.ch->req ), false );
    }
    p.phase = 2;
  };

  for ( auto& p : producers )
    assert_token( p, 0 );
  for ( auto const& s : tb.waveform )
    schedule( s.time, net_node( s.net ), s.value );

  auto tb_step = [&]( uint64_t now ) {
    for ( auto& p : producers )
    {
      bool const ack = net_value( p.ch->ack );
      bool const rose = ack && !p.last_ack;
      bool const fell = !ack && p.last_ack;
      p.last_ack = ack;
      if ( p.phase == 1 && rose )
        retire_token( p, now + 1 );
      else if ( p.phase == 2 && fell )
      {
        if ( ++p.next < p.script.size() )
          assert_token( p, now + 1 );
        else
          p.phase = 3;
      }
    }
    for ( auto& co : consumers )
    {
      bool state;
      if ( co.ch->kind == channel_kind::dual_rail )
        state = net_value( co.ch->rail_t ) != net_value( co.ch->rail_f );
      else
        state = net_value( co.ch->req );
      if ( co.ack_node >= 0 && state != co.last_in )
        schedule( now + 1, co.ack_node, state );
      co.last_in = state;
    }
    if ( !env_ack_drive.empty() )
    {
      bool all1 = true, all0 = true;
      for ( int id : env_ack_watch )
      {
        all1 = all1 && value[id];
        all0 = all0 && !value[id];
      }
      bool const next = all1 || ( env_ack_state && !all0 );
      if ( next != env_ack_state )
      {
        env_ack_state = next;
        for ( int id : env_ack_drive )
          schedule( now + 1, id, next );
      }
    }
  };

  // main loop -----------------------------------------------------------
  uint64_t now = 0;
  bool hit_t_max = false;
  while ( !queue.empty() )
  {
    uint64_t const t = queue.top().time;
    if ( t > t_max )
    {
      hit_t_max = true;
      break;
    }
    now = t;
    std::vector<int> changed;
    while ( !queue.empty() && queue.top().time == t )
    {
      event const e = queue.top();
      queue.pop();
      auto const& node = m.nodes[e.node];
      if ( node.kind == sim_model::node_kind::evaluator )
      {
        if ( pending_seq[e.node] != int64_t( e.seq ) )
          continue; // cancelled or superseded
        pending_seq[e.node] = -1;
      }
      if ( bool( value[e.node] ) != e.val )
      {
        value[e.node] = e.val;
        out.changes.push_back( { t, e.seq, e.node, e.val } );
        changed.push_back( e.node );
      }
    }
    std::set<int> affected;
    for ( int id : changed )
      for ( int next : m.fanout[id] )
        affected.insert( next );
    for ( int id : affected )
      evaluate( id, t );
    tb_step( t );
  }
  out.end_time = hit_t_max ? t_max : now;

  bool complete = true;
  for ( auto const& p : producers )
    complete = complete && p.phase == 3;
  out.timed_out = !complete;
  return out;
}

inline trace run( sim_model const& m, testbench const& tb, delay_model const& d )
{
  return run( m, tb, d, tb.timeout );
}

// ---------------------------------------------------------------------------
// Token extraction
// ---------------------------------------------------------------------------

struct token_sequence
{
  std::string channel;
  std::vector<uint64_t> values;

  bool operator==( token_sequence const& ) const = default;
};

struct extraction_result
{
  std::vector<token_sequence> sequences;
  diagnostics diags;
};

/*! \brief Decodes per-channel token values from a trace.
 *
 * Dual-rail: the rail pattern at the spacer-to-valid edge, spacer
 * required between tokens; both rails high is flagged.  Bundled: data
 * bits at each request rise, first listed data net is bit 0.
 */
inline extraction_result extract_tokens( trace const& t, std::vector<channel> const& channels )
{
  extraction_result result;
  std::map<std::string, int> index;
  for ( std::size_t i = 0; i < t.signals.size(); ++i )
    index[t.signals[i]] = int( i );
  auto signal_index = [&]( std::string const& net ) {
    auto it = index.find( net );
    return it == index.end() ? -1 : it->second;
  };

  for ( auto const& c : channels )
  {
    token_sequence seq;
    seq.channel = c.name;
    if ( c.kind == channel_kind::dual_rail )
    {
      int const it_ = signal_index( c.rail_t ), if_ = signal_index( c.rail_f );
      if ( it_ < 0 || if_ < 0 )
      {
        result.diags.push_back(
            { "unknown-signal", "channel '" + c.name + "' rails not in the trace" } );
        continue;
      }
      bool rt = t.initial[it_], rf = t.initial[if_];
      bool was_spacer = !rt && !rf;
      std::size_t i = 0;
      while ( i < t.changes.size() )
      {
        uint64_t const now = t.changes[i].time;
        for ( ; i < t.changes.size() && t.changes[i].time == now; ++i )
        {
          auto const& ch = t.changes[i];
          if ( ch.signal == it_ )
            rt = ch.value;
          else if ( ch.signal == if_ )
            rf = ch.value;
        }
        if ( rt && rf )
        {
          result.diags.push_back( { "protocol-violation", "channel '" + c.name +
                                                              "': both rails high at t=" +
                                                              std::to_string( now ) } );
        }
        else if ( rt != rf )
        {
          if ( was_spacer )
            seq.values.push_back( rt ? 1 : 0 );
          else if ( !seq.values.empty() &&
                    seq.values.back() != uint64_t( rt ? 1 : 0 ) )
            result.diags.push_back( { "rtz-violation", "channel '" + c.name +
                                                           "': new value without spacer at t=" +
                                                           std::to_string( now ) } );
          was_spacer = false;
        }
        else
        {
          was_spacer = true;
        }
      }
    }
    else
    {
      int const ireq = signal_index( c.req );
      std::vector<int> idata;
      bool known = ireq >= 0;
      for ( auto const& dnet : c.data )
      {
        idata.push_back( signal_index( dnet ) );
        known = known && idata.back() >= 0;
      }
      if ( !known )
      {
        result.diags.push_back(
            { "unknown-signal", "channel '" + c.name + "' nets not in the trace" } );
        continue;
      }
      std::vector<bool> state( t.signals.size() );
      for ( std::size_t s = 0; s < t.signals.size(); ++s )
        state[s] = t.initial[s];
      std::size_t i = 0;
      while ( i < t.changes.size() )
      {
        uint64_t const now = t.changes[i].time;
        bool const req_before = state[ireq];
        for ( ; i < t.changes.size() && t.changes[i].time == now; ++i )
          state[t.changes[i].signal] = t.changes[i].value;
        if ( !req_before && state[ireq] )
        {
          uint64_t v = 0;
          for ( std::size_t bit = 0; bit < idata.size(); ++bit )
            v |= uint64_t( state[idata[bit]] ) << bit;
          seq.values.push_back( v );
        }
      }
    }
    result.sequences.push_back( std::move( seq ) );
  }
  return result;
}

// ---------------------------------------------------------------------------
// QDI robustness
// ---------------------------------------------------------------------------

struct robustness_verdict
{
  bool pass = true;
  int failing_trial = -1;
  std::string failing_channel;
  int failing_token = -1;
  std::string message;
};

/*! \brief Compares `trials` randomized-delay runs against the nominal
 *         run's token sequences; any divergence or timeout fails.
 */
inline robustness_verdict qdi_robustness( sim_model const& m, testbench const& tb, int trials,
                                          uint32_t seed )
{
  auto const nominal = extract_tokens( run( m, tb, delay_model::nominal() ), tb.channels );

  robustness_verdict verdict;
  for ( int trial = 0; trial < trials; ++trial )
  {
    auto const t = run( m, tb, delay_model::random( seed + uint32_t( trial ) ) );
    if ( t.timed_out )
    {
      verdict.pass = false;
      verdict.failing_trial = trial;
      verdict.message = "trial " + std::to_string( trial ) + " timed out";
      return verdict;
    }
    auto const got = extract_tokens( t, tb.channels );
    for ( std::size_t c = 0; c < nominal.sequences.size(); ++c )
    {
      auto const& want = nominal.sequences[c];
      auto const& have = got.sequences[c];
      std::size_t const len = std::max( want.values.size(), have.values.size() );
      for ( std::size_t i = 0; i < len; ++i )
      {
        bool const differ = i >= want.values.size() || i >= have.values.size() ||
                            want.values[i] != have.values[i];
        if ( differ )
        {
          verdict.pass = false;
          verdict.failing_trial = trial;
          verdict.failing_channel = want.channel;
          verdict.failing_token = int( i );
          verdict.message = "trial " + std::to_string( trial ) + " diverges on channel '" +
                            want.channel + "' token " + std::to_string( i );
          return verdict;
        }
      }
    }
  }
  return verdict;
}

} // namespace afpga
