// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. `dispatch` is the whole program minus process
// setup, so tests can drive it in-process.

#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace xferlaw::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. Reports and
/// summaries go to `out`; errors go to `err` as
/// {"error": {"kind": ..., "message": ...}}.
int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Top-level usage text listing the subcommands.
std::string usage();

}  // namespace xferlaw::cli
