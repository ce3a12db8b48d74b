// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

/*!
  \file afpga_version.hpp
  \brief Library version
*/

#pragma once

#define AFPGA_VERSION "0.1.0"
