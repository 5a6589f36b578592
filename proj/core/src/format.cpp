// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/format.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace xferlaw {

std::string format_double(double v) {
  if (!std::isfinite(v)) return {};
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

}  // namespace xferlaw
