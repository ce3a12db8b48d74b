// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file afpga.hpp
  \brief Convenience header including the whole library
*/

#pragma once

#include "arch.hpp"
#include "bitstream.hpp"
#include "cli.hpp"
#include "flow.hpp"
#include "mapper.hpp"
#include "netlist.hpp"
#include "plb.hpp"
#include "pnr.hpp"
#include "sim.hpp"
#include "vcd.hpp"
