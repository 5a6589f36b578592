// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/transfer_law.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "xferlaw/error.hpp"

namespace xferlaw {

void TransferCoefficients::validate() const {
  if (!(std::isfinite(k) && k > 0.0)) throw InvalidArgument("transfer coefficient k must be positive");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidArgument("transfer exponent alpha must lie in [0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("transfer exponent beta must lie in (0, 1)");
  for (const auto& [d, n] : per_df_nstar) {
    if (!(d > 0.0 && n > 0.0)) throw InvalidArgument("per-group (d_finetune, n_star) must be positive");
  }
}

void to_json(nlohmann::json& j, const TransferCoefficients& c) {
  auto groups = nlohmann::json::array();
  for (const auto& [d, n] : c.per_df_nstar) groups.push_back({{"d_finetune", d}, {"n_star", n}});
  auto diagnostics = nlohmann::json::object();
  for (const auto& [stage, fit] : c.diagnostics) diagnostics[stage] = fit;
  j = nlohmann::json{{"k", c.k},
                     {"alpha", c.alpha},
                     {"beta", c.beta},
                     {"per_df_nstar", groups},
                     {"diagnostics", diagnostics}};
}

void from_json(const nlohmann::json& j, TransferCoefficients& c) {
  c = TransferCoefficients{};
  c.k = j.at("k").get<double>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  if (auto it = j.find("per_df_nstar"); it != j.end()) {
    for (const auto& g : *it) c.per_df_nstar.emplace_back(g.at("d_finetune").get<double>(), g.at("n_star").get<double>());
  }
  if (auto it = j.find("diagnostics"); it != j.end()) {
    for (const auto& [stage, fit] : it->items()) c.diagnostics.emplace_back(stage, fit.get<FitResult>());
  }
}

TransferCoefficients text_preset() {
  TransferCoefficients c;
  c.k = 1.9e4;
  c.alpha = 0.18;
  c.beta = 0.38;
  return c;
}

TransferCoefficients mixture_preset() {
  TransferCoefficients c;
  c.k = 2.1e5;
  c.alpha = 0.096;
  c.beta = 0.38;
  return c;
}

std::optional<TransferCoefficients> preset_by_name(std::string_view name) {
  if (name == "text") return text_preset();
  if (name == "mixture") return mixture_preset();
  return std::nullopt;
}

double evaluate_transfer(const TransferCoefficients& c, double n_params, double d_finetune) {
  if (!(n_params >= 1.0)) throw InvalidArgument("n_params must be at least 1");
  if (!(d_finetune >= 1.0)) throw InvalidArgument("d_finetune must be at least 1");
  return c.k * std::pow(d_finetune, c.alpha) * std::pow(n_params, c.beta);
}

Multiplier effective_multiplier(const TransferCoefficients& c, double n_params, double d_finetune) {
  const double d_t = evaluate_transfer(c, n_params, d_finetune);
  Multiplier m;
  m.exact = (d_finetune + d_t) / d_finetune;
  m.approximate = c.k * std::pow(n_params, c.beta) / std::pow(d_finetune, 1.0 - c.alpha);
  return m;
}

namespace {

std::string group_name(std::int64_t d_finetune) {
  return "D_F=" + std::to_string(d_finetune);
}

}  // namespace

TransferCoefficients fit_transfer_fit_of_fits(std::span<const EffectiveDataRow> rows,
                                              const FitOfFitsOptions& options) {
  std::map<std::int64_t, std::vector<Point2>> groups;
  for (const auto& r : rows) {
    auto& g = groups[r.d_finetune];
    if (r.usable_for_fit()) g.push_back({static_cast<double>(r.n_params), r.fraction});
  }
  // Row order must not matter.
  for (auto& [d, pts] : groups) {
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
      return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
  }

  std::vector<std::string> sparse;
  for (const auto& [d, pts] : groups) {
    std::set<double> distinct_n;
    for (const auto& p : pts) distinct_n.insert(p.x);
    if (distinct_n.size() < 2) sparse.push_back(group_name(d));
  }
  if (!sparse.empty()) {
    std::string msg = "fewer than 2 usable rows (distinct model sizes with 0 < fraction < 1) in group(s):";
    for (const auto& s : sparse) msg += " " + s;
    throw FitError(msg);
  }
  if (groups.size() < 2) throw FitError("fit-of-fits needs at least 2 distinct d_finetune groups");

  TransferCoefficients out;

  // Stage 1: free logit fits per group.
  std::vector<double> exponents;
  for (const auto& [d, pts] : groups) {
    const LogitFit f = fit_logit_saturation(pts);
    exponents.push_back(f.exponent);
    out.diagnostics.emplace_back("stage1 " + group_name(d), f.fit);
  }

  // Stage 2: shared exponent, groups refit with it held fixed.
  double beta = 0.0;
  for (double e : exponents) beta += e;
  beta /= static_cast<double>(exponents.size());
  FitResult shared;
  shared.n_points = exponents.size();
  shared.converged = true;
  const auto [lo, hi] = std::minmax_element(exponents.begin(), exponents.end());
  if (*hi - *lo > options.beta_spread_warning) {
    std::ostringstream os;
    os << "per-group logit exponents span " << *lo << " to " << *hi << " (spread "
       << (*hi - *lo) << " > " << options.beta_spread_warning << ")";
    shared.warnings.push_back(os.str());
  }
  shared.params = {{"mean_exponent", beta}, {"min_exponent", *lo}, {"max_exponent", *hi}};
  if (options.common_beta) {
    if (!(*options.common_beta > 0.0)) throw InvalidArgument("common beta must be positive");
    beta = *options.common_beta;
  }
  shared.params.emplace_back("beta", beta);
  out.diagnostics.emplace_back("stage2 shared exponent", shared);

  std::vector<Point2> nstar;
  for (const auto& [d, pts] : groups) {
    const LogitFit f = fit_logit_saturation(pts, beta);
    nstar.push_back({static_cast<double>(d), f.n_star});
    out.per_df_nstar.emplace_back(static_cast<double>(d), f.n_star);
    out.diagnostics.emplace_back("stage2 " + group_name(d), f.fit);
  }

  // Stage 3: N* = (D_F^(1 - alpha) / k)^(1 / beta) is a line in log-log.
  const LineFit line = fit_loglog_line(nstar);
  out.beta = beta;
  out.alpha = 1.0 - line.exponent * beta;
  out.k = std::pow(10.0, -line.log10_intercept * beta);
  out.diagnostics.emplace_back("stage3 n_star line", line.fit);
  return out;
}

TransferCoefficients fit_transfer_direct(std::span<const EffectiveDataRow> rows) {
  std::vector<const EffectiveDataRow*> usable;
  for (const auto& r : rows) {
    if (r.usable_for_fit()) usable.push_back(&r);
  }
  // Canonical order so the solve is bit-identical under row permutations.
  std::sort(usable.begin(), usable.end(), [](const EffectiveDataRow* a, const EffectiveDataRow* b) {
    return std::tie(a->d_finetune, a->n_params, a->d_transferred) <
           std::tie(b->d_finetune, b->n_params, b->d_transferred);
  });
  if (usable.size() < 3) throw FitError("direct transfer fit needs at least 3 rows with positive transfer");

  const auto m = static_cast<Eigen::Index>(usable.size());
  Eigen::MatrixXd design(m, 3);
  Eigen::VectorXd target(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& r = *usable[static_cast<std::size_t>(i)];
    design(i, 0) = 1.0;
    design(i, 1) = std::log(static_cast<double>(r.d_finetune));
    design(i, 2) = std::log(static_cast<double>(r.n_params));
    target(i) = std::log(r.d_transferred);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) {
    throw FitError("direct transfer fit is rank deficient: (N, D_F) design is collinear");
  }
  const Eigen::VectorXd coef = qr.solve(target);
  const Eigen::VectorXd resid = design * coef - target;

  TransferCoefficients out;
  out.k = std::exp(coef(0));
  out.alpha = coef(1);
  out.beta = coef(2);
  FitResult fit;
  fit.params = {{"ln_k", coef(0)}, {"alpha", coef(1)}, {"beta", coef(2)}};
  fit.n_points = usable.size();
  fit.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(m));
  fit.converged = true;
  out.diagnostics.emplace_back("direct ols", fit);
  return out;
}

}  // namespace xferlaw
