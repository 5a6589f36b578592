// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xferlaw/error.hpp"
#include "xferlaw/format.hpp"

namespace xferlaw {

namespace {

/// Slope below this (in log-log) counts as flat.
constexpr double kFlatSlope = 1e-12;

/// Derivative at `at` of the interpolating polynomial through the given
/// points (two or three of them).
double local_derivative(const std::vector<Point2>& pts, double at) {
  if (pts.size() == 2) return (pts[1].y - pts[0].y) / (pts[1].x - pts[0].x);
  const auto& [x0, y0] = pts[0];
  const auto& [x1, y1] = pts[1];
  const auto& [x2, y2] = pts[2];
  return y0 * (2 * at - x1 - x2) / ((x0 - x1) * (x0 - x2)) +
         y1 * (2 * at - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
         y2 * (2 * at - x0 - x1) / ((x2 - x0) * (x2 - x1));
}

}  // namespace

FinetunedLossPrediction predict_finetuned_loss(const ScalingLawParams& surface, const TransferCoefficients& c,
                                               double n_params, double d_finetune) {
  surface.validate();
  c.validate();
  FinetunedLossPrediction p;
  p.n_params = n_params;
  p.d_finetune = d_finetune;
  p.d_transferred = evaluate_transfer(c, n_params, d_finetune);
  p.d_effective = d_finetune + p.d_transferred;
  p.loss_transfer_only = surface.loss(n_params, p.d_transferred);
  p.loss_effective = surface.loss(n_params, p.d_effective);
  return p;
}

void to_json(nlohmann::json& j, const FinetunedLossPrediction& p) {
  j = nlohmann::json{{"n_params", p.n_params},
                     {"d_finetune", p.d_finetune},
                     {"d_transferred", p.d_transferred},
                     {"d_effective", p.d_effective},
                     {"loss_transfer_only", p.loss_transfer_only},
                     {"loss_effective", p.loss_effective}};
}

FewshotEstimate fewshot_effective_data(const TransferCoefficients& c, double n_params, double context_chars) {
  if (!(context_chars >= 1.0)) throw InvalidArgument("context_chars must be at least 1");
  FewshotEstimate e;
  e.n_params = n_params;
  e.context_chars = context_chars;
  e.d_effective = context_chars + evaluate_transfer(c, n_params, context_chars);
  const double zero_shot = kZeroShotFinetune + evaluate_transfer(c, n_params, kZeroShotFinetune);
  e.multiplier_vs_zero_shot = e.d_effective / zero_shot;
  return e;
}

void to_json(nlohmann::json& j, const FewshotEstimate& e) {
  j = nlohmann::json{{"n_params", e.n_params},
                     {"context_chars", e.context_chars},
                     {"d_effective", e.d_effective},
                     {"multiplier_vs_zero_shot", e.multiplier_vs_zero_shot},
                     {"caveat", e.caveat}};
}

TradeoffAdvice data_vs_model_tradeoff(const TransferCoefficients& c, double data_factor) {
  if (!(data_factor > 0.0)) throw InvalidArgument("data_factor must be positive");
  if (!(c.beta > 0.0)) throw InvalidArgument("beta must be positive");
  TradeoffAdvice a;
  a.data_factor = data_factor;
  a.equivalent_model_factor = std::pow(data_factor, c.alpha / c.beta);
  std::ostringstream os;
  os << "equal transferred data under D_T = k*D_F^alpha*N^beta with k=" << format_double(c.k)
     << ", alpha=" << format_double(c.alpha) << ", beta=" << format_double(c.beta)
     << "; valid in the low-data regime (D_F <= 10% of D(N))";
  a.assumptions = os.str();
  return a;
}

void to_json(nlohmann::json& j, const TradeoffAdvice& a) {
  j = nlohmann::json{{"data_factor", a.data_factor},
                     {"equivalent_model_factor", a.equivalent_model_factor},
                     {"assumptions", a.assumptions}};
}

std::string_view to_string(Advice a) {
  switch (a) {
    case Advice::kTradeoff:
      return "tradeoff";
    case Advice::kDataDominant:
      return "data_dominant";
    case Advice::kDataSaturated:
      return "data_saturated";
    case Advice::kNeitherHelps:
      return "neither_helps";
  }
  return "tradeoff";
}

AdvisorReport data_collection_advisor(std::span<const EffectiveDataRow> subsamples,
                                      std::span<const SweepPoint> model_sweep) {
  // Data levels: lowest loss per distinct d_finetune.
  std::map<std::int64_t, double> levels;
  std::optional<std::int64_t> n_params;
  for (const auto& r : subsamples) {
    if (!std::isfinite(r.loss) || !(r.loss > 0.0)) continue;
    if (n_params && *n_params != r.n_params) {
      throw InvalidArgument("subsample rows mix model sizes " + std::to_string(*n_params) + " and " +
                            std::to_string(r.n_params));
    }
    n_params = r.n_params;
    auto [it, inserted] = levels.emplace(r.d_finetune, r.loss);
    if (!inserted) it->second = std::min(it->second, r.loss);
  }
  if (levels.size() < 2) throw InvalidArgument("advisor needs at least two subsample levels with finite loss");

  std::map<double, double> sweep;
  for (const auto& s : model_sweep) {
    if (!(s.n_params > 0.0) || !std::isfinite(s.loss) || !(s.loss > 0.0)) continue;
    auto [it, inserted] = sweep.emplace(s.n_params, s.loss);
    if (!inserted) it->second = std::min(it->second, s.loss);
  }
  if (sweep.size() < 2) throw InvalidArgument("advisor needs at least two model sizes in the sweep");

  AdvisorReport rep;
  rep.n_params = static_cast<double>(*n_params);

  std::vector<Point2> data_pts;
  for (const auto& [d, l] : levels) data_pts.push_back({std::log(static_cast<double>(d)), std::log(l)});
  rep.d_finetune = static_cast<double>(levels.rbegin()->first);
  const bool saturated = data_pts[data_pts.size() - 1].y == data_pts[data_pts.size() - 2].y;
  std::vector<Point2> tail(data_pts.end() - std::min<std::ptrdiff_t>(3, std::ssize(data_pts)), data_pts.end());
  rep.data_slope = saturated ? 0.0 : local_derivative(tail, data_pts.back().x);

  // Three sweep points nearest the subsample's size in log N.
  const double at = std::log(rep.n_params);
  std::vector<Point2> model_pts;
  for (const auto& [n, l] : sweep) model_pts.push_back({std::log(n), std::log(l)});
  std::stable_sort(model_pts.begin(), model_pts.end(), [at](const Point2& a, const Point2& b) {
    return std::abs(a.x - at) < std::abs(b.x - at);
  });
  model_pts.resize(std::min<std::size_t>(3, model_pts.size()));
  std::sort(model_pts.begin(), model_pts.end(), [](const Point2& a, const Point2& b) { return a.x < b.x; });
  rep.model_slope = local_derivative(model_pts, at);

  const bool data_flat = saturated || rep.data_slope > -kFlatSlope;
  const bool model_flat = rep.model_slope > -kFlatSlope;
  std::ostringstream os;
  if (data_flat && model_flat) {
    rep.advice = Advice::kNeitherHelps;
    os << "neither more data nor a larger model reduces loss at this point";
  } else if (model_flat) {
    rep.advice = Advice::kDataDominant;
    os << "data collection strictly dominant: loss is flat in model size at "
       << format_double(rep.d_finetune) << " characters";
  } else if (data_flat) {
    rep.advice = Advice::kDataSaturated;
    os << "data saturated: more fine-tuning data does not reduce loss; prefer a larger model";
  } else {
    rep.advice = Advice::kTradeoff;
    rep.data_factor_per_10x_model = std::pow(10.0, rep.model_slope / rep.data_slope);
    rep.extra_characters_per_10x_model = rep.d_finetune * (rep.data_factor_per_10x_model - 1.0);
    os << "a 10x larger model is worth " << format_double(rep.data_factor_per_10x_model)
       << "x more fine-tuning data (about " << format_double(rep.extra_characters_per_10x_model)
       << " extra characters)";
  }
  rep.recommendation = os.str();
  return rep;
}

void to_json(nlohmann::json& j, const AdvisorReport& r) {
  j = nlohmann::json{{"n_params", r.n_params},
                     {"d_finetune", r.d_finetune},
                     {"data_slope", r.data_slope},
                     {"model_slope", r.model_slope},
                     {"data_factor_per_10x_model", r.data_factor_per_10x_model},
                     {"extra_characters_per_10x_model", r.extra_characters_per_10x_model},
                     {"advice", to_string(r.advice)},
                     {"recommendation", r.recommendation}};
}

}  // namespace xferlaw
