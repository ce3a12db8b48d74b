// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file vcd.hpp
  \brief Value change dump output for simulation traces

  One time unit maps to 1 ns.  Identifier codes use the printable ASCII
  range, one character per signal until it is exhausted, then two, and
  so on.  The initial values of all signals are dumped, then one value
  line per trace transition, so the dump length matches the trace.
*/

#pragma once

#include <sstream>
#include <string>

#include "sim.hpp"

namespace afpga
{

namespace detail
{

inline std::string vcd_id( int index )
{
  std::string id;
  do
  {
    id += char( 33 + index % 94 );
    index = index / 94 - 1;
  } while ( index >= 0 );
  return id;
}

} // namespace detail

/*! \brief Renders a trace as a VCD document with one scope \p module. */
inline std::string write_vcd( trace const& t, std::string const& module = "top" )
{
  std::ostringstream os;
  os << "$timescale 1ns $end\n";
  os << "$scope module " << module << " $end\n";
  for ( std::size_t i = 0; i < t.signals.size(); ++i )
    os << "$var wire 1 " << detail::vcd_id( int( i ) ) << " " << t.signals[i] << " $end\n";
  os << "$upscope $end\n";
  os << "$enddefinitions $end\n";
  os << "$dumpvars\n";
  for ( std::size_t i = 0; i < t.signals.size(); ++i )
    os << ( t.initial[i] ? '1' : '0' ) << detail::vcd_id( int( i ) ) << "\n";
  os << "$end\n";
  uint64_t last_time = 0;
  bool any = false;
  for ( auto const& c : t.changes )
  {
    if ( !any || c.time != last_time )
    {
      os << "#" << c.time << "\n";
      last_time = c.time;
      any = true;
    }
    os << ( c.value ? '1' : '0' ) << detail::vcd_id( c.signal ) << "\n";
  }
  return os.str();
}

} // namespace afpga
