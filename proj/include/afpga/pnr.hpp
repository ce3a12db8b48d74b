// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file pnr.hpp
  \brief Placement and negotiated-congestion routing

  place drops clusters onto PLB sites walking outward from the grid
  center, then refines with simulated annealing on half-perimeter
  wirelength; every run is a pure function of the seed.  Physical pins
  are assigned nearest-side greedy toward each net's other endpoints.

  route is PathFinder-style: per-iteration rip-up and shortest-path
  reroute over the routing graph, with present congestion scaled by a
  factor growing 0.5, 0.75, ... (x1.5 per iteration) and a +1 history
  penalty per overused node per iteration.  After 50 iterations without
  a legal solution the net set is declared unroutable.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "arch.hpp"
#include "diagnostics.hpp"
#include "mapper.hpp"

namespace afpga
{

class pnr_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/*! \brief Cluster sites plus per-cluster net-to-pin maps. */
struct placement
{
  std::vector<std::pair<int, int>> sites;            // cluster -> (row, col)
  std::vector<std::map<std::string, int>> input_pin; // cluster -> net -> input pin
  std::vector<std::map<std::string, int>> output_pin; // cluster -> net -> output pin

  bool operator==( placement const& ) const = default;
};

/*! \brief One routed net: a tree of routing-graph nodes rooted at the
 *         driver pin, stored as directed (parent, child) arcs.
 */
struct route_tree
{
  std::string net;
  int driver = -1;
  std::vector<int> sinks;
  std::vector<std::pair<int, int>> arcs;

  std::vector<int> nodes() const
  {
    std::vector<int> all;
    if ( driver >= 0 )
      all.push_back( driver );
    for ( auto const& [from, to] : arcs )
      all.push_back( to );
    return all;
  }

  /*! \brief Segment nodes on the tree; sim charges one delay unit each. */
  int segment_count( routing_graph const& g ) const
  {
    int count = 0;
    for ( int node : nodes() )
      count += ( g.nodes[node].kind == routing_graph::node_kind::segment );
    return count;
  }

  bool operator==( route_tree const& ) const = default;
};

struct routes
{
  std::vector<route_tree> nets;

  bool operator==( routes const& ) const = default;
};

/*! \brief Human-readable routing-graph node name for reports. */
inline std::string node_name( routing_graph const& g, fabric const& f, int id )
{
  auto const& n = g.nodes[id];
  switch ( n.kind )
  {
  case routing_graph::node_kind::input_pin:
    return "plb" + std::to_string( n.plb ) + ".in" + std::to_string( n.pin );
  case routing_graph::node_kind::output_pin:
    return "plb" + std::to_string( n.plb ) + ".out" + std::to_string( n.pin );
  default:
    return f.group_name( n.group ) + ".t" + std::to_string( n.track );
  }
}

namespace detail
{

/*! \brief Nets touching each cluster from outside or inside. */
struct cluster_connectivity
{
  std::vector<std::set<std::string>> consumed;  // per cluster
  std::vector<std::set<std::string>> produced;  // per cluster
  std::map<std::string, std::vector<int>> touching; // net -> clusters
};

inline cluster_connectivity analyze_clusters( packing const& p )
{
  cluster_connectivity cc;
  cc.consumed.resize( p.clusters.size() );
  cc.produced.resize( p.clusters.size() );
  for ( std::size_t ci = 0; ci < p.clusters.size(); ++ci )
  {
    auto const& c = p.clusters[ci];
    for ( auto const& le : c.les )
    {
      auto add_func = [&]( int fi ) {
        if ( fi < 0 )
          return;
        for ( auto const& in : p.funcs[fi].inputs )
          cc.consumed[ci].insert( in );
        cc.produced[ci].insert( p.funcs[fi].output );
      };
      for ( int s : le.slot )
        add_func( s );
      add_func( le.v_slot );
    }
    if ( c.pdel_gate >= 0 )
    {
      cc.consumed[ci].insert( p.source.gates[c.pdel_gate].inputs[0] );
      cc.produced[ci].insert( p.source.gates[c.pdel_gate].output );
    }
    for ( auto const& net : cc.consumed[ci] )
      cc.touching[net].push_back( int( ci ) );
    for ( auto const& net : cc.produced[ci] )
      if ( !cc.consumed[ci].count( net ) )
        cc.touching[net].push_back( int( ci ) );
  }
  return cc;
}

inline side pick_side( double drow, double dcol )
{
  if ( std::abs( drow ) >= std::abs( dcol ) )
  {
    if ( drow > 0 )
      return side::north;
    if ( drow < 0 )
      return side::south;
    return dcol > 0 ? side::east : ( dcol < 0 ? side::west : side::north );
  }
  return dcol > 0 ? side::east : side::west;
}

} // namespace detail

/*! \brief Sites in placement preference order: Manhattan distance from
 *         the grid center, then row, then column.
 */
inline std::vector<std::pair<int, int>> site_order( fabric_params const& p )
{
  int const cr = ( p.rows - 1 ) / 2, cc = ( p.cols - 1 ) / 2;
  std::vector<std::pair<int, int>> sites;
  for ( int r = 0; r < p.rows; ++r )
    for ( int c = 0; c < p.cols; ++c )
      sites.push_back( { r, c } );
  std::stable_sort( sites.begin(), sites.end(), [&]( auto const& a, auto const& b ) {
    int const da = std::abs( a.first - cr ) + std::abs( a.second - cc );
    int const db = std::abs( b.first - cr ) + std::abs( b.second - cc );
    if ( da != db )
      return da < db;
    return a < b;
  } );
  return sites;
}

inline placement place( packing const& p, fabric const& f, uint32_t seed )
{
  int const num_clusters = int( p.clusters.size() );
  if ( num_clusters > f.num_plbs() )
    throw pnr_error( "too-many-clusters: " + std::to_string( num_clusters ) + " clusters on " +
                     std::to_string( f.num_plbs() ) + " sites" );

  auto const order = site_order( f.params );
  placement pl;
  pl.sites.assign( order.begin(), order.begin() + num_clusters );

  auto const cc = detail::analyze_clusters( p );
  std::vector<std::vector<int>> nets; // multi-cluster nets, as cluster lists
  for ( auto const& [net, clusters] : cc.touching )
    if ( clusters.size() > 1 )
      nets.push_back( clusters );

  auto net_cost = [&]( std::vector<int> const& clusters ) {
    int rmin = 1 << 30, rmax = -( 1 << 30 ), cmin = 1 << 30, cmax = -( 1 << 30 );
    for ( int ci : clusters )
    {
      auto const [r, c] = pl.sites[ci];
      rmin = std::min( rmin, r );
      rmax = std::max( rmax, r );
      cmin = std::min( cmin, c );
      cmax = std::max( cmax, c );
    }
    return ( rmax - rmin ) + ( cmax - cmin );
  };
  auto total_cost = [&]() {
    int cost = 0;
    for ( auto const& net : nets )
      cost += net_cost( net );
    return cost;
  };

  // annealing refinement; skipped when nothing can improve
  if ( total_cost() > 0 )
  {
    std::vector<std::vector<int>> nets_of( num_clusters );
    for ( std::size_t ni = 0; ni < nets.size(); ++ni )
      for ( int ci : nets[ni] )
        nets_of[ci].push_back( int( ni ) );

    std::map<std::pair<int, int>, int> cluster_at;
    for ( int ci = 0; ci < num_clusters; ++ci )
      cluster_at[pl.sites[ci]] = ci;

    std::vector<std::pair<int, int>> all_sites;
    for ( int r = 0; r < f.params.rows; ++r )
      for ( int c = 0; c < f.params.cols; ++c )
        all_sites.push_back( { r, c } );

    std::mt19937 rng( seed );
    int const moves_per_t = 16 * num_clusters;
    for ( double t = 2.0; t > 0.05; t *= 0.9 )
    {
      for ( int move = 0; move < moves_per_t; ++move )
      {
        int const ci = int( rng() % uint32_t( num_clusters ) );
        auto const target = all_sites[rng() % all_sites.size()];
        if ( target == pl.sites[ci] )
          continue;
        auto it = cluster_at.find( target );
        int const cj = it == cluster_at.end() ? -1 : it->second;

        std::set<int> affected( nets_of[ci].begin(), nets_of[ci].end() );
        if ( cj >= 0 )
          affected.insert( nets_of[cj].begin(), nets_of[cj].end() );
        int before = 0;
        for ( int ni : affected )
          before += net_cost( nets[ni] );

        auto const old_site = pl.sites[ci];
        pl.sites[ci] = target;
        if ( cj >= 0 )
          pl.sites[cj] = old_site;

        int after = 0;
        for ( int ni : affected )
          after += net_cost( nets[ni] );

        int const delta = after - before;
        double const u = double( rng() ) / 4294967296.0;
        if ( delta <= 0 || u < std::exp( -double( delta ) / t ) )
        {
          cluster_at.erase( old_site );
          cluster_at[target] = ci;
          if ( cj >= 0 )
            cluster_at[old_site] = cj;
        }
        else
        {
          pl.sites[ci] = old_site;
          if ( cj >= 0 )
            pl.sites[cj] = target;
        }
      }
    }
  }

  // nearest-side greedy pin assignment toward each net's other endpoints
  pl.input_pin.resize( num_clusters );
  pl.output_pin.resize( num_clusters );
  for ( int ci = 0; ci < num_clusters; ++ci )
  {
    auto const& c = p.clusters[ci];
    std::vector<std::string> in_nets, out_nets;
    auto add_in = [&]( std::string const& net ) {
      if ( cc.produced[ci].count( net ) )
        return; // satisfied inside the PLB
      if ( std::find( in_nets.begin(), in_nets.end(), net ) == in_nets.end() )
        in_nets.push_back( net );
    };
    for ( auto const& le : c.les )
      for ( auto const& net : le.input_nets )
        add_in( net );
    if ( c.pdel_gate >= 0 )
      add_in( p.source.gates[c.pdel_gate].inputs[0] );

    auto consumed_elsewhere = [&]( std::string const& net ) {
      for ( int cj = 0; cj < num_clusters; ++cj )
        if ( cj != ci && cc.consumed[cj].count( net ) )
          return true;
      return p.source.is_output_port( net );
    };
    auto add_out = [&]( std::string const& net ) {
      if ( !consumed_elsewhere( net ) )
        return;
      if ( std::find( out_nets.begin(), out_nets.end(), net ) == out_nets.end() )
        out_nets.push_back( net );
    };
    for ( auto const& le : c.les )
    {
      for ( int s : le.slot )
        if ( s >= 0 )
          add_out( p.funcs[s].output );
      if ( le.v_slot >= 0 )
        add_out( p.funcs[le.v_slot].output );
    }
    if ( c.pdel_gate >= 0 )
      add_out( p.source.gates[c.pdel_gate].output );

    auto target_side = [&]( std::string const& net, bool incoming ) {
      double tr = 0, tc = 0;
      int count = 0;
      for ( int cj : cc.touching.count( net ) ? cc.touching.at( net ) : std::vector<int>{} )
      {
        if ( cj == ci )
          continue;
        bool const relevant = incoming ? cc.produced[cj].count( net ) > 0
                                       : cc.consumed[cj].count( net ) > 0;
        if ( !relevant )
          continue;
        tr += pl.sites[cj].first;
        tc += pl.sites[cj].second;
        ++count;
      }
      if ( count == 0 )
        return side::north;
      return detail::pick_side( tr / count - pl.sites[ci].first,
                                tc / count - pl.sites[ci].second );
    };

    auto assign = [&]( std::string const& net, bool incoming ) {
      int const per_side = ( incoming ? f.params.plb_inputs : f.params.plb_outputs ) / 4;
      auto& pins = incoming ? pl.input_pin[ci] : pl.output_pin[ci];
      std::set<int> taken;
      for ( auto const& [_, pin] : pins )
        taken.insert( pin );
      int const start = int( target_side( net, incoming ) );
      for ( int turn = 0; turn < 4; ++turn )
      {
        int const s = ( start + turn ) % 4;
        for ( int j = 0; j < per_side; ++j )
        {
          int const pin = s + 4 * j;
          if ( !taken.count( pin ) )
          {
            pins[net] = pin;
            return;
          }
        }
      }
      throw pnr_error( "pin-overflow: cluster " + std::to_string( ci ) + " net '" + net + "'" );
    };
    for ( auto const& net : in_nets )
      assign( net, true );
    for ( auto const& net : out_nets )
      assign( net, false );
  }

  return pl;
}

inline routes route( placement const& pl, fabric const& f )
{
  auto const g = build_routing_graph( f );

  struct net_task
  {
    std::string net;
    int driver;
    std::vector<int> sinks;
  };
  std::vector<net_task> tasks;
  {
    std::map<std::string, int> driver_node;
    std::map<std::string, std::vector<int>> sink_nodes;
    for ( std::size_t ci = 0; ci < pl.sites.size(); ++ci )
    {
      int const plb = f.plb_id( pl.sites[ci].first, pl.sites[ci].second );
      for ( auto const& [net, pin] : pl.output_pin[ci] )
        driver_node[net] = g.output_pin_node( plb, pin );
      for ( auto const& [net, pin] : pl.input_pin[ci] )
        sink_nodes[net].push_back( g.input_pin_node( plb, pin ) );
    }
    for ( auto const& [net, driver] : driver_node )
    {
      auto it = sink_nodes.find( net );
      if ( it != sink_nodes.end() )
        tasks.push_back( { net, driver, it->second } );
    }
  }

  std::vector<double> hist( g.nodes.size(), 0.0 );
  std::vector<int> occ( g.nodes.size(), 0 );
  routes result;

  double pres_fac = 0.5;
  for ( int iter = 0; iter < 50; ++iter )
  {
    result.nets.clear();
    std::fill( occ.begin(), occ.end(), 0 );

    for ( auto const& task : tasks )
    {
      route_tree tree;
      tree.net = task.net;
      tree.driver = task.driver;
      tree.sinks = task.sinks;

      std::set<int> tree_nodes = { task.driver };
      for ( int sink : task.sinks )
      {
        // Dijkstra growth from the current tree to this sink
        std::vector<double> dist( g.nodes.size(), -1.0 );
        std::vector<int> prev( g.nodes.size(), -1 );
        using entry = std::pair<double, int>;
        std::priority_queue<entry, std::vector<entry>, std::greater<>> pq;
        for ( int node : tree_nodes )
        {
          dist[node] = 0.0;
          pq.push( { 0.0, node } );
        }
        while ( !pq.empty() )
        {
          auto const [d, node] = pq.top();
          pq.pop();
          if ( d > dist[node] )
            continue;
          if ( node == sink )
            break;
          for ( int next : g.edges_out[node] )
          {
            if ( tree_nodes.count( next ) && next != sink )
              continue;
            double const cost =
                d + ( 1.0 + hist[next] ) * ( 1.0 + pres_fac * occ[next] );
            if ( dist[next] < 0 || cost < dist[next] )
            {
              dist[next] = cost;
              prev[next] = node;
              pq.push( { cost, next } );
            }
          }
        }
        if ( dist[sink] < 0 )
          throw pnr_error( "unroutable: no path to sink for net '" + task.net + "'" );

        std::vector<std::pair<int, int>> path;
        for ( int node = sink; prev[node] >= 0 && !tree_nodes.count( node );
              node = prev[node] )
          path.push_back( { prev[node], node } );
        for ( auto it = path.rbegin(); it != path.rend(); ++it )
        {
          tree.arcs.push_back( *it );
          tree_nodes.insert( it->second );
        }
      }

      for ( int node : tree.nodes() )
        ++occ[node];
      result.nets.push_back( std::move( tree ) );
    }

    bool overused = false;
    for ( std::size_t node = 0; node < occ.size(); ++node )
    {
      if ( occ[node] > 1 )
      {
        overused = true;
        hist[node] += 1.0;
      }
    }
    if ( !overused )
      return result;
    pres_fac *= 1.5;
  }
  throw pnr_error( "unroutable: congestion unresolved after 50 iterations" );
}

/*! \brief Capacity-1, connectivity and tree-shape verification. */
inline diagnostics check_routes( routes const& r, fabric const& f )
{
  auto const g = build_routing_graph( f );
  diagnostics diags;

  std::map<int, std::vector<std::string>> users;
  for ( auto const& tree : r.nets )
  {
    std::set<int> seen;
    for ( int node : tree.nodes() )
      if ( seen.insert( node ).second )
        users[node].push_back( tree.net );
  }
  for ( auto const& [node, nets] : users )
  {
    if ( nets.size() > 1 )
    {
      std::string names;
      for ( auto const& net : nets )
        names += ( names.empty() ? "" : ", " ) + net;
      diags.push_back( { "overuse", "node " + node_name( g, f, node ) + " used by " + names } );
    }
  }

  for ( auto const& tree : r.nets )
  {
    std::map<int, int> indegree;
    bool ok = true;
    for ( auto const& [from, to] : tree.arcs )
    {
      if ( std::find( g.edges_out[from].begin(), g.edges_out[from].end(), to ) ==
           g.edges_out[from].end() )
      {
        diags.push_back( { "invalid-arc", "net '" + tree.net + "': " + node_name( g, f, from ) +
                                              " -> " + node_name( g, f, to ) +
                                              " is not a graph edge" } );
        ok = false;
      }
      indegree[to]++;
    }
    for ( auto const& [node, deg] : indegree )
    {
      if ( deg > 1 || node == tree.driver )
      {
        diags.push_back( { "not-a-tree", "net '" + tree.net + "': node " +
                                             node_name( g, f, node ) + " entered " +
                                             std::to_string( deg ) + " times" } );
        ok = false;
      }
    }
    if ( !ok )
      continue;

    std::set<int> reach = { tree.driver };
    bool grew = true;
    while ( grew )
    {
      grew = false;
      for ( auto const& [from, to] : tree.arcs )
      {
        if ( reach.count( from ) && reach.insert( to ).second )
          grew = true;
      }
    }
    if ( reach.size() != tree.arcs.size() + 1 )
      diags.push_back(
          { "disconnected", "net '" + tree.net + "': arcs not all reachable from the driver" } );
    for ( int sink : tree.sinks )
    {
      if ( !reach.count( sink ) )
        diags.push_back( { "disconnected", "net '" + tree.net + "': sink " +
                                               node_name( g, f, sink ) + " unreached" } );
    }
  }

  return diags;
}

/*! \brief Per-net text listing of pins and segments, for reports. */
inline std::string route_report( routes const& r, fabric const& f )
{
  auto const g = build_routing_graph( f );
  std::string out;
  for ( auto const& tree : r.nets )
  {
    out += tree.net + ": " + node_name( g, f, tree.driver );
    for ( auto const& [from, to] : tree.arcs )
      out += " -> " + node_name( g, f, to );
    out += "  [" + std::to_string( tree.segment_count( g ) ) + " segments]\n";
  }
  return out;
}

} // namespace afpga
