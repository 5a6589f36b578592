// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace xferlaw {

namespace {

struct Evaluation {
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  double cost = 0.0;
};

bool evaluate(const ResidualFn& fn, const std::vector<double>& p, std::size_t m, bool with_jac,
              Evaluation& out) {
  const std::size_t n = p.size();
  out.r.resize(static_cast<Eigen::Index>(m));
  std::vector<double> jac(with_jac ? m * n : 0);
  fn(p, std::span<double>(out.r.data(), m), std::span<double>(jac));
  if (!out.r.allFinite()) return false;
  out.cost = 0.5 * out.r.squaredNorm();
  if (with_jac) {
    out.J = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        jac.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    if (!out.J.allFinite()) return false;
  }
  return true;
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFn& fn, std::size_t n_residuals,
                             std::vector<double> initial, const LmOptions& options,
                             const ProjectFn& project) {
  const std::size_t n = initial.size();
  if (project) project(initial);

  LmResult result;
  result.params = initial;

  Evaluation cur;
  if (!evaluate(fn, initial, n_residuals, true, cur)) {
    result.cost = std::numeric_limits<double>::infinity();
    result.gradient_norm = std::numeric_limits<double>::infinity();
    return result;
  }

  double lambda = options.initial_damping;
  std::vector<double> p = initial;
  Eigen::VectorXd g = cur.J.transpose() * cur.r;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (g.norm() < options.gradient_tol) break;

    const Eigen::MatrixXd JtJ = cur.J.transpose() * cur.J;
    Eigen::VectorXd diag = JtJ.diagonal();
    for (Eigen::Index j = 0; j < diag.size(); ++j) diag[j] = std::max(diag[j], 1e-12);

    bool accepted = false;
    while (lambda <= options.max_damping) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * diag;
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      std::vector<double> trial(n);
      for (std::size_t j = 0; j < n; ++j) trial[j] = p[j] + step[static_cast<Eigen::Index>(j)];
      if (project) project(trial);

      Evaluation next;
      if (step.allFinite() && evaluate(fn, trial, n_residuals, true, next) && next.cost < cur.cost) {
        p = std::move(trial);
        cur = std::move(next);
        g = cur.J.transpose() * cur.r;
        lambda = std::max(lambda / options.damping_factor, 1e-15);
        accepted = true;
        break;
      }
      // A step that leaves the cost unchanged at machine precision means we
      // are sitting on the minimum; stop rather than inflate damping forever.
      if (step.allFinite() && step.norm() <= 1e-15 * (1.0 + Eigen::Map<Eigen::VectorXd>(p.data(), n).norm())) {
        break;
      }
      lambda *= options.damping_factor;
    }
    if (!accepted) break;
  }

  result.params = p;
  result.cost = cur.cost;
  result.gradient_norm = g.norm();
  result.iterations = it;
  result.converged = result.gradient_norm < options.gradient_tol;
  return result;
}

}  // namespace xferlaw
