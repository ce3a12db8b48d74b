// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace afpga
{

/*! \brief One check finding, identified by a stable machine-readable code. */
struct diagnostic
{
  std::string code;
  std::string message;
};

using diagnostics = std::vector<diagnostic>;

inline std::string to_string( diagnostics const& diags )
{
  std::string s;
  for ( auto const& d : diags )
  {
    s += d.code;
    s += ": ";
    s += d.message;
    s += '\n';
  }
  return s;
}

} // namespace afpga
