// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

// Small random-input helpers for property tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

namespace xferlaw::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  /// Uniform in log10 between lo and hi (both positive).
  double log_uniform(double lo, double hi) { return std::pow(10.0, uniform(std::log10(lo), std::log10(hi))); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(rng_); }
  bool coin() { return integer(0, 1) == 1; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Runs `body(gen)` for `cases` independent cases; each failure is tagged
/// with its case seed so it can be replayed.
template <class Body>
void for_all(int cases, std::uint64_t seed, Body body) {
  for (int i = 0; i < cases; ++i) {
    const std::uint64_t case_seed = seed * 1'000'003ULL + static_cast<std::uint64_t>(i);
    std::ostringstream tag;
    tag << "property case " << i << " (seed " << case_seed << ")";
    SCOPED_TRACE(tag.str());
    Gen gen(case_seed);
    body(gen);
    if (::testing::Test::HasFatalFailure()) return;
  }
}

inline double rel_diff(double got, double want) {
  return std::abs(got - want) / std::abs(want);
}

}  // namespace xferlaw::testing
