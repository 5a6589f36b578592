// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/curve_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xferlaw/error.hpp"

namespace xferlaw {

namespace {

struct Ols {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};

/// Centered least-squares line; caller guarantees >= 2 distinct x.
Ols ols(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Ols out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (out.intercept + out.slope * x[i]);
    ss += r * r;
  }
  out.rms = std::sqrt(ss / n);
  return out;
}

std::size_t distinct_count(std::span<const double> v) {
  std::set<double> s(v.begin(), v.end());
  return s.size();
}

double logsumexp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

std::optional<double> FitResult::param(std::string_view name) const {
  for (const auto& [k, v] : params) {
    if (k == name) return v;
  }
  return std::nullopt;
}

void to_json(nlohmann::json& j, const FitResult& r) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  j = nlohmann::json{{"params", params},
                     {"residual_rms", r.residual_rms},
                     {"n_points", r.n_points},
                     {"converged", r.converged},
                     {"iterations", r.iterations},
                     {"gradient_norm", r.gradient_norm},
                     {"warnings", r.warnings}};
}

void from_json(const nlohmann::json& j, FitResult& r) {
  r = FitResult{};
  if (auto it = j.find("params"); it != j.end()) {
    for (const auto& [k, v] : it->items()) r.params.emplace_back(k, v.is_number() ? v.get<double>() : std::nan(""));
  }
  r.residual_rms = j.value("residual_rms", 0.0);
  r.n_points = j.value("n_points", std::size_t{0});
  r.converged = j.value("converged", false);
  r.iterations = j.value("iterations", 0);
  r.gradient_norm = j.value("gradient_norm", 0.0);
  r.warnings = j.value("warnings", std::vector<std::string>{});
}

// ---------------------------------------------------------------------------

double LineFit::evaluate(double x) const {
  return std::pow(10.0, log10_intercept + exponent * std::log10(x));
}

LineFit fit_loglog_line(std::span<const Point2> points) {
  std::vector<double> lx;
  std::vector<double> ly;
  lx.reserve(points.size());
  ly.reserve(points.size());
  for (const auto& p : points) {
    if (!(p.x > 0.0) || !(p.y > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y)) {
      std::ostringstream os;
      os << "log-log fit needs positive finite points, got (" << p.x << ", " << p.y << ")";
      throw InvalidArgument(os.str());
    }
    lx.push_back(std::log10(p.x));
    ly.push_back(std::log10(p.y));
  }
  if (distinct_count(lx) < 2) throw FitError("log-log fit needs at least two distinct x values");
  const Ols o = ols(lx, ly);
  LineFit out;
  out.exponent = o.slope;
  out.log10_intercept = o.intercept;
  out.fit.params = {{"exponent", o.slope}, {"log10_intercept", o.intercept}};
  out.fit.residual_rms = o.rms;
  out.fit.n_points = points.size();
  out.fit.converged = true;
  return out;
}

// ---------------------------------------------------------------------------

namespace models {

void PowerLawConst::operator()(std::span<const double> p, std::span<double> r,
                               std::span<double> jac) const {
  const double floor = p[0];
  const double log_scale = p[1];
  const double exponent = p[2];
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double u = log_scale - std::log(points[i].x);
    const double t = std::exp(exponent * u);
    const double m = floor + t;
    r[i] = std::log(m) - std::log(points[i].y);
    if (!jac.empty()) {
      jac[i * kParams + 0] = 1.0 / m;
      jac[i * kParams + 1] = exponent * t / m;
      jac[i * kParams + 2] = u * t / m;
    }
  }
}

void ScalingSurface::operator()(std::span<const double> p, std::span<double> r,
                                std::span<double> jac) const {
  const double ln_nc = p[0];
  const double alpha_n = p[1];
  const double ln_dc = p[2];
  const double alpha_d = p[3];
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double gap = ln_nc - std::log(points[i].n_params);
    const double u = (alpha_n / alpha_d) * gap;
    const double v = ln_dc - std::log(points[i].data);
    const double lse = logsumexp(u, v);
    r[i] = alpha_d * lse - std::log(points[i].loss);
    if (!jac.empty()) {
      const double wa = std::exp(u - lse);
      const double wb = std::exp(v - lse);
      jac[i * kParams + 0] = alpha_n * wa;
      jac[i * kParams + 1] = wa * gap;
      jac[i * kParams + 2] = alpha_d * wb;
      jac[i * kParams + 3] = lse - (alpha_n / alpha_d) * wa * gap;
    }
  }
}

}  // namespace models

// ---------------------------------------------------------------------------

double PowerLawConstFit::evaluate(double x) const {
  if (scale == 0.0) return floor;
  return floor + std::pow(scale / x, exponent);
}

namespace {

struct PowerLawAttempt {
  LmResult lm;
  double floor0 = 0.0;
};

std::vector<double> powerlaw_initial(std::span<const Point2> points, double floor0) {
  std::vector<Point2> shifted;
  shifted.reserve(points.size());
  for (const auto& p : points) shifted.push_back({p.x, std::max(p.y - floor0, 1e-300)});
  double exponent = 0.0;
  double log10_scale = 0.0;
  bool have_line = false;
  try {
    const LineFit line = fit_loglog_line(shifted);
    exponent = -line.exponent;
    if (exponent > 1e-3) {
      log10_scale = line.log10_intercept / exponent;
      have_line = true;
    }
  } catch (const Error&) {
  }
  if (!have_line) {
    exponent = 0.1;
    double acc = 0.0;
    for (const auto& p : shifted) acc += std::log10(p.y) / exponent + std::log10(p.x);
    log10_scale = acc / static_cast<double>(shifted.size());
  }
  return {floor0, log10_scale * std::log(10.0), exponent};
}

}  // namespace

PowerLawConstFit fit_powerlaw_plus_const(std::span<const Point2> points,
                                         const PowerLawConstOptions& options) {
  if (points.size() < 4) throw FitError("power-law-plus-constant fit needs at least 4 points");
  double ymin = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    if (!(p.x > 0.0) || !(p.y > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y)) {
      std::ostringstream os;
      os << "power-law-plus-constant fit needs positive finite points, got (" << p.x << ", " << p.y << ")";
      throw InvalidArgument(os.str());
    }
    ymin = std::min(ymin, p.y);
  }

  models::PowerLawConst model{points};
  auto project = [](std::span<double> q) { q[0] = std::max(q[0], 0.0); };

  // Primary start uses floor = 0.9 min(y); the others are only tried when it
  // fails to converge.
  std::optional<PowerLawAttempt> best;
  for (double fraction : {0.9, 0.5, 0.99, 0.0}) {
    LmResult lm = levenberg_marquardt(model, points.size(), powerlaw_initial(points, fraction * ymin),
                                      options.lm, project);
    if (!best || (lm.converged && !best->lm.converged) ||
        (lm.converged == best->lm.converged && lm.cost < best->lm.cost)) {
      best = PowerLawAttempt{lm, fraction * ymin};
    }
    if (best->lm.converged) break;
  }

  const auto& lm = best->lm;
  PowerLawConstFit out;
  out.floor = lm.params[0];
  out.scale = std::exp(lm.params[1]);
  out.exponent = lm.params[2];

  // A power term that is constant over the observed range cannot be told
  // apart from the floor; fold it in.
  double tmin = std::numeric_limits<double>::infinity();
  double tmax = 0.0;
  double tsum = 0.0;
  for (const auto& p : points) {
    const double t = std::exp(out.exponent * (lm.params[1] - std::log(p.x)));
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
    tsum += t;
  }
  const double level = out.floor + tsum / static_cast<double>(points.size());
  if (tmax - tmin <= 1e-9 * level) {
    out.floor = level;
    out.scale = 0.0;
    out.fit.warnings.push_back("power term is constant over the data; folded into floor");
  }

  out.fit.params = {{"floor", out.floor}, {"scale", out.scale}, {"exponent", out.exponent}};
  out.fit.n_points = points.size();
  out.fit.residual_rms = std::sqrt(2.0 * lm.cost / static_cast<double>(points.size()));
  out.fit.converged = lm.converged;
  out.fit.iterations = lm.iterations;
  out.fit.gradient_norm = lm.gradient_norm;
  if (!lm.converged) out.fit.warnings.push_back("damped least squares did not reach gradient tolerance");
  return out;
}

// ---------------------------------------------------------------------------

double LogitFit::evaluate(double n_params) const {
  return 1.0 / (1.0 + std::pow(n_star / n_params, exponent));
}

LogitFit fit_logit_saturation(std::span<const Point2> points, std::optional<double> fixed_exponent) {
  std::vector<std::string> bad;
  for (const auto& p : points) {
    if (!(p.y > 0.0 && p.y < 1.0) || !(p.x > 0.0) || !std::isfinite(p.x)) {
      std::ostringstream os;
      os << "(N=" << p.x << ", fraction=" << p.y << ")";
      bad.push_back(os.str());
    }
  }
  if (!bad.empty()) {
    std::string msg = "fractions must lie strictly inside (0,1) with N > 0; offending points:";
    for (const auto& b : bad) msg += " " + b;
    throw InvalidArgument(msg);
  }
  std::vector<double> lx;
  std::vector<double> logit;
  for (const auto& p : points) {
    lx.push_back(std::log(p.x));
    logit.push_back(std::log(p.y / (1.0 - p.y)));
  }

  LogitFit out;
  out.fit.n_points = points.size();
  out.fit.converged = true;
  if (fixed_exponent) {
    if (points.empty()) throw FitError("logit fit needs at least one point");
    if (!(*fixed_exponent > 0.0)) throw InvalidArgument("fixed logit exponent must be positive");
    const double e = *fixed_exponent;
    double acc = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) acc += lx[i] - logit[i] / e;
    const double ln_nstar = acc / static_cast<double>(lx.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = logit[i] - e * (lx[i] - ln_nstar);
      ss += r * r;
    }
    out.exponent = e;
    out.n_star = std::exp(ln_nstar);
    out.fit.residual_rms = std::sqrt(ss / static_cast<double>(lx.size()));
  } else {
    if (distinct_count(lx) < 2) throw FitError("logit fit needs at least two distinct model sizes");
    const Ols o = ols(lx, logit);
    if (o.slope == 0.0) throw FitError("logit fit has zero slope; N* undefined");
    out.exponent = o.slope;
    out.n_star = std::exp(-o.intercept / o.slope);
    out.fit.residual_rms = o.rms;
  }
  out.fit.params = {{"n_star", out.n_star}, {"exponent", out.exponent}};
  return out;
}

// ---------------------------------------------------------------------------

double ScalingLawParams::loss(double n_params, double data) const {
  return std::pow(std::pow(n_c / n_params, alpha_n / alpha_d) + d_c / data, alpha_d);
}

double ScalingLawParams::loss_infinite_data(double n_params) const {
  return std::pow(n_c / n_params, alpha_n);
}

void ScalingLawParams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(n_c) || !positive(d_c) || !positive(alpha_n) || !positive(alpha_d)) {
    throw InvalidArgument("scaling-law parameters must be positive and finite");
  }
  if (alpha_n >= 2.0 || alpha_d >= 2.0) {
    throw InvalidArgument("scaling-law exponents must lie in (0, 2)");
  }
}

void to_json(nlohmann::json& j, const ScalingLawParams& p) {
  j = nlohmann::json{{"n_c", p.n_c}, {"alpha_n", p.alpha_n}, {"d_c", p.d_c}, {"alpha_d", p.alpha_d}};
}

void from_json(const nlohmann::json& j, ScalingLawParams& p) {
  p.n_c = j.at("n_c").get<double>();
  p.alpha_n = j.at("alpha_n").get<double>();
  p.d_c = j.at("d_c").get<double>();
  p.alpha_d = j.at("alpha_d").get<double>();
}

void to_json(nlohmann::json& j, const SurfaceFit& f) {
  auto rows = nlohmann::json::array();
  for (const auto& r : f.residuals) {
    rows.push_back({{"n_params", r.n_params},
                    {"data", r.data},
                    {"loss", r.loss},
                    {"fitted", r.fitted},
                    {"log_residual", r.log_residual}});
  }
  j = nlohmann::json{{"params", f.params}, {"diagnostics", f.fit}, {"residuals", rows}};
}

namespace {

std::vector<std::vector<double>> surface_starts(std::span<const SurfacePoint> points) {
  // Infinite-data loss per N from the lowest loss seen at that N.
  std::map<double, double> best_by_n;
  for (const auto& p : points) {
    auto [it, inserted] = best_by_n.emplace(p.n_params, p.loss);
    if (!inserted) it->second = std::min(it->second, p.loss);
  }
  std::vector<Point2> linf;
  for (const auto& [n, l] : best_by_n) linf.push_back({n, l});
  const LineFit nfit = fit_loglog_line(linf);
  double alpha_n = -nfit.exponent;
  if (!(alpha_n > 1e-3)) alpha_n = 0.1;
  const double ln_nc = nfit.log10_intercept * std::log(10.0) / alpha_n;

  // Data exponent from the small-D half of the largest model's curve, where
  // the d_c / D term dominates.
  const double n_max = best_by_n.rbegin()->first;
  std::vector<Point2> head;
  for (const auto& p : points) {
    if (p.n_params == n_max) head.push_back({p.data, p.loss});
  }
  std::sort(head.begin(), head.end(), [](const Point2& a, const Point2& b) { return a.x < b.x; });
  head.resize(std::max<std::size_t>(2, (head.size() + 1) / 2));

  auto ln_dc_for = [&](double alpha_d) {
    double acc = 0.0;
    for (const auto& p : head) acc += std::log(p.y) / alpha_d + std::log(p.x);
    return acc / static_cast<double>(head.size());
  };

  std::vector<std::vector<double>> starts;
  double alpha_d = 0.1;
  try {
    const LineFit dfit = fit_loglog_line(head);
    if (-dfit.exponent > 1e-3) alpha_d = -dfit.exponent;
  } catch (const Error&) {
  }
  starts.push_back({ln_nc, alpha_n, ln_dc_for(alpha_d), alpha_d});
  for (double a : {0.05, 0.1, 0.2, 0.4, 0.8}) starts.push_back({ln_nc, alpha_n, ln_dc_for(a), a});
  return starts;
}

}  // namespace

SurfaceFit fit_global_fromscratch(std::span<const SurfacePoint> points, const SurfaceFitOptions& options) {
  std::vector<double> ns;
  std::vector<double> ds;
  for (const auto& p : points) {
    if (!(p.n_params > 0.0) || !(p.data > 0.0) || !(p.loss > 0.0) || !std::isfinite(p.loss)) {
      throw InvalidArgument("surface fit needs positive finite (N, D, L) points");
    }
    ns.push_back(p.n_params);
    ds.push_back(p.data);
  }
  if (distinct_count(ns) < 3 || distinct_count(ds) < 3) {
    throw FitError("surface fit needs at least 3 model sizes and 3 dataset sizes (rank-deficient grid)");
  }

  models::ScalingSurface model{points};
  auto project = [](std::span<double> q) {
    q[1] = std::clamp(q[1], 1e-6, 10.0);
    q[3] = std::clamp(q[3], 1e-6, 10.0);
  };

  std::optional<LmResult> best;
  for (auto& start : surface_starts(points)) {
    LmResult lm = levenberg_marquardt(model, points.size(), start, options.lm, project);
    if (!best || (lm.converged && !best->converged) ||
        (lm.converged == best->converged && lm.cost < best->cost)) {
      best = std::move(lm);
    }
    if (best->converged && best->cost < 1e-20) break;
  }

  SurfaceFit out;
  out.params = {std::exp(best->params[0]), best->params[1], std::exp(best->params[2]), best->params[3]};
  out.fit.params = {{"n_c", out.params.n_c},
                    {"alpha_n", out.params.alpha_n},
                    {"d_c", out.params.d_c},
                    {"alpha_d", out.params.alpha_d}};
  out.fit.n_points = points.size();
  out.fit.residual_rms = std::sqrt(2.0 * best->cost / static_cast<double>(points.size()));
  out.fit.converged = best->converged;
  out.fit.iterations = best->iterations;
  out.fit.gradient_norm = best->gradient_norm;
  if (!best->converged) out.fit.warnings.push_back("damped least squares did not reach gradient tolerance");
  for (const auto& p : points) {
    const double fitted = out.params.loss(p.n_params, p.data);
    out.residuals.push_back({p.n_params, p.data, p.loss, fitted, std::log(fitted) - std::log(p.loss)});
  }
  return out;
}

SurfaceFit fit_global_fromscratch(std::span<const LossCurve> curves, const SurfaceFitOptions& options) {
  std::vector<SurfacePoint> points;
  for (const auto& c : curves) {
    if (c.axis != Axis::kData || c.level != Level::kAcrossRuns) {
      throw InvalidArgument("surface fit expects across-runs data-axis curves");
    }
    for (const auto& p : c.points) {
      points.push_back({static_cast<double>(c.n_params), p.x, p.loss});
    }
  }
  return fit_global_fromscratch(points, options);
}

}  // namespace xferlaw
