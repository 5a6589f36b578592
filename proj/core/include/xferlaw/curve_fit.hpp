// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xferlaw/levenberg_marquardt.hpp"
#include "xferlaw/run_store.hpp"

namespace xferlaw {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Diagnostics common to every fitting kernel. Closed-form fits report
/// iterations = 0 and converged = true.
struct FitResult {
  std::vector<std::pair<std::string, double>> params;
  double residual_rms = 0.0;
  std::size_t n_points = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<std::string> warnings;

  std::optional<double> param(std::string_view name) const;
};

void to_json(nlohmann::json& j, const FitResult& r);
void from_json(const nlohmann::json& j, FitResult& r);

// ---------------------------------------------------------------------------

/// log10(y) = exponent * log10(x) + log10_intercept.
struct LineFit {
  double exponent = 0.0;
  double log10_intercept = 0.0;
  FitResult fit;

  double evaluate(double x) const;
};

/// Ordinary least squares on (log10 x, log10 y). Throws FitError for fewer
/// than two distinct x values and InvalidArgument for non-positive input.
LineFit fit_loglog_line(std::span<const Point2> points);

// ---------------------------------------------------------------------------

/// y = floor + (scale / x)^exponent.
struct PowerLawConstFit {
  double floor = 0.0;
  double scale = 1.0;
  double exponent = 0.0;
  FitResult fit;

  double evaluate(double x) const;
};

struct PowerLawConstOptions {
  LmOptions lm;
};

/// Damped least squares on log-loss residuals with floor >= 0. Requires at
/// least four points. Non-convergence is reported through fit.converged.
PowerLawConstFit fit_powerlaw_plus_const(std::span<const Point2> points,
                                         const PowerLawConstOptions& options = {});

// ---------------------------------------------------------------------------

/// fraction = 1 / (1 + (n_star / N)^exponent), i.e.
/// logit(fraction) = exponent * (ln N - ln n_star).
struct LogitFit {
  double n_star = 0.0;
  double exponent = 0.0;
  FitResult fit;

  double evaluate(double n_params) const;
};

/// Least squares in logit space. With `fixed_exponent` only n_star is fit and
/// a single point suffices; otherwise at least two distinct N are needed.
/// Throws InvalidArgument listing every point whose fraction is outside (0,1).
LogitFit fit_logit_saturation(std::span<const Point2> points,
                              std::optional<double> fixed_exponent = std::nullopt);

// ---------------------------------------------------------------------------

/// L(N, D) = [(n_c / N)^(alpha_n / alpha_d) + d_c / D]^alpha_d.
struct ScalingLawParams {
  double n_c = 1.0;
  double alpha_n = 0.1;
  double d_c = 1.0;
  double alpha_d = 0.1;

  double loss(double n_params, double data) const;
  /// D -> infinity limit, (n_c / N)^alpha_n.
  double loss_infinite_data(double n_params) const;
  /// Throws InvalidArgument unless all four are positive and both exponents
  /// lie in (0, 2).
  void validate() const;
};

void to_json(nlohmann::json& j, const ScalingLawParams& p);
void from_json(const nlohmann::json& j, ScalingLawParams& p);

struct SurfacePoint {
  double n_params = 0.0;
  double data = 0.0;
  double loss = 0.0;
};

struct SurfaceResidual {
  double n_params = 0.0;
  double data = 0.0;
  double loss = 0.0;
  double fitted = 0.0;
  /// ln(fitted) - ln(loss).
  double log_residual = 0.0;
};

struct SurfaceFit {
  ScalingLawParams params;
  FitResult fit;
  std::vector<SurfaceResidual> residuals;
};

struct SurfaceFitOptions {
  LmOptions lm;
};

/// Fits the from-scratch surface on log-loss residuals. Needs at least three
/// distinct model sizes and three distinct dataset sizes (FitError otherwise).
SurfaceFit fit_global_fromscratch(std::span<const SurfacePoint> points,
                                  const SurfaceFitOptions& options = {});
/// Uses the cleaned best-loss points of across-runs data-axis curves.
SurfaceFit fit_global_fromscratch(std::span<const LossCurve> curves,
                                  const SurfaceFitOptions& options = {});

void to_json(nlohmann::json& j, const SurfaceFit& f);

// ---------------------------------------------------------------------------
// Residual models used by the damped fits. Exposed so the analytic Jacobians
// can be checked against finite differences.

namespace models {

/// Parameters: {floor, ln scale, exponent}.
struct PowerLawConst {
  static constexpr std::size_t kParams = 3;
  std::span<const Point2> points;

  void operator()(std::span<const double> p, std::span<double> r, std::span<double> jac) const;
};

/// Parameters: {ln n_c, alpha_n, ln d_c, alpha_d}.
struct ScalingSurface {
  static constexpr std::size_t kParams = 4;
  std::span<const SurfacePoint> points;

  void operator()(std::span<const double> p, std::span<double> r, std::span<double> jac) const;
};

}  // namespace models

}  // namespace xferlaw
