// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/levenberg_marquardt.hpp"

#include <cmath>

#include <gtest/gtest.h>

namespace xferlaw {
namespace {

// Rosenbrock as residuals: r = (10 (y - x^2), 1 - x).
void rosenbrock(std::span<const double> p, std::span<double> r, std::span<double> jac) {
  r[0] = 10.0 * (p[1] - p[0] * p[0]);
  r[1] = 1.0 - p[0];
  if (!jac.empty()) {
    jac[0] = -20.0 * p[0];
    jac[1] = 10.0;
    jac[2] = -1.0;
    jac[3] = 0.0;
  }
}

TEST(LevenbergMarquardt, SolvesRosenbrock) {
  const LmResult res = levenberg_marquardt(rosenbrock, 2, {-1.2, 1.0});
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.params[0], 1.0, 1e-8);
  EXPECT_NEAR(res.params[1], 1.0, 1e-8);
  EXPECT_LT(res.gradient_norm, 1e-10);
  EXPECT_LE(res.iterations, 500);
}

TEST(LevenbergMarquardt, LinearProblemConvergesQuickly) {
  // r_i = a + b x_i - y_i for y = 2 + 3x.
  auto fn = [](std::span<const double> p, std::span<double> r, std::span<double> jac) {
    for (int i = 0; i < 5; ++i) {
      r[i] = p[0] + p[1] * i - (2.0 + 3.0 * i);
      if (!jac.empty()) {
        jac[i * 2] = 1.0;
        jac[i * 2 + 1] = i;
      }
    }
  };
  const LmResult res = levenberg_marquardt(fn, 5, {0.0, 0.0});
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.params[0], 2.0, 1e-10);
  EXPECT_NEAR(res.params[1], 3.0, 1e-10);
  EXPECT_LT(res.iterations, 20);
}

TEST(LevenbergMarquardt, IterationBudgetReportsNotConverged) {
  LmOptions opts;
  opts.max_iterations = 2;
  const LmResult res = levenberg_marquardt(rosenbrock, 2, {-1.2, 1.0}, opts);
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.iterations, 2);
  // Returned parameters are never worse than the start.
  EXPECT_LT(res.cost, 0.5 * (std::pow(10.0 * (1.0 - 1.44), 2) + std::pow(2.2, 2)));
}

TEST(LevenbergMarquardt, ProjectionKeepsParametersFeasible) {
  // Minimum of (p - (-3))^2 subject to p >= 0 is at p = 0.
  auto fn = [](std::span<const double> p, std::span<double> r, std::span<double> jac) {
    r[0] = p[0] + 3.0;
    if (!jac.empty()) jac[0] = 1.0;
  };
  auto project = [](std::span<double> p) { p[0] = std::max(p[0], 0.0); };
  const LmResult res = levenberg_marquardt(fn, 1, {5.0}, {}, project);
  EXPECT_GE(res.params[0], 0.0);
  EXPECT_NEAR(res.params[0], 0.0, 1e-12);
}

TEST(LevenbergMarquardt, NonFiniteStartIsReported) {
  auto fn = [](std::span<const double> p, std::span<double> r, std::span<double>) { r[0] = std::log(p[0]); };
  const LmResult res = levenberg_marquardt(fn, 1, {-1.0});
  EXPECT_FALSE(res.converged);
  EXPECT_TRUE(std::isinf(res.cost));
}

}  // namespace
}  // namespace xferlaw
