// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace xferlaw {

/// Shortest text that parses back to the same double. Non-finite values
/// become the empty string, which is how CSV exports mark missing cells.
std::string format_double(double v);

}  // namespace xferlaw
