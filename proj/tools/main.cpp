// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "xferlaw/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return xferlaw::cli::dispatch(args, std::cout, std::cerr);
}
