// Copyright (c) 2026 afpga contributors
// SPDX-License-Identifier: Apache-2.0

#include <afpga/cli.hpp>

int main( int argc, char** argv )
{
  return afpga::run_command( argc, argv );
}
