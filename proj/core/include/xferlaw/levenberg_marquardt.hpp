// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace xferlaw {

struct LmOptions {
  int max_iterations = 500;
  /// Converged when the 2-norm of J^T r drops below this.
  double gradient_tol = 1e-10;
  double initial_damping = 1e-3;
  /// Damping is multiplied by this after a rejected step and divided by it
  /// after an accepted one.
  double damping_factor = 10.0;
  /// Give up once the damping exceeds this without an acceptable step.
  double max_damping = 1e16;
};

/// Fills `residuals` (size m) at `params` (size n). When `jacobian` is
/// non-empty it has m*n entries, row-major: jacobian[i*n + j] = d r_i / d p_j.
using ResidualFn = std::function<void(std::span<const double> params, std::span<double> residuals,
                                      std::span<double> jacobian)>;

/// Maps a trial parameter vector back into the feasible set (in place).
using ProjectFn = std::function<void(std::span<double> params)>;

struct LmResult {
  std::vector<double> params;
  /// 0.5 * sum r_i^2 at `params`.
  double cost = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton (Marquardt diagonal scaling) on 0.5 * ||r(p)||^2.
/// Returns the best parameters seen, with converged=false when the iteration
/// or damping budget ran out before the gradient tolerance was met.
LmResult levenberg_marquardt(const ResidualFn& fn, std::size_t n_residuals,
                             std::vector<double> initial, const LmOptions& options = {},
                             const ProjectFn& project = {});

}  // namespace xferlaw
