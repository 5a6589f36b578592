// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include <nlohmann/json.hpp>

#include "xferlaw/error.hpp"

namespace xferlaw {

std::vector<FrontierPoint> pareto_frontier(std::span<const LossCurve> curves) {
  std::vector<FrontierPoint> all;
  for (const auto& c : curves) {
    if (c.axis != Axis::kCompute) continue;
    for (const auto& p : c.points) {
      if (std::isfinite(p.raw_loss)) all.push_back({p.x, p.raw_loss, p.run_id});
    }
  }
  if (all.empty()) throw InvalidArgument("pareto frontier needs compute-axis curves with finite losses");

  std::sort(all.begin(), all.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
    return std::tie(a.compute, a.loss, a.run_id) < std::tie(b.compute, b.loss, b.run_id);
  });
  std::vector<FrontierPoint> out;
  for (auto& p : all) {
    if (out.empty() || p.loss < out.back().loss) out.push_back(std::move(p));
  }
  return out;
}

ConvergedCompute converged_compute(const LossCurve& curve, double rel_tol) {
  const auto& pts = curve.points;
  if (pts.empty()) throw InvalidArgument("converged_compute needs a non-empty curve");
  const double final_best = pts.back().loss;
  std::size_t idx = pts.size() - 1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if ((pts[i].loss - final_best) / pts[i].loss < rel_tol) {
      idx = i;
      break;
    }
  }
  return {pts[idx].x, pts[idx].loss, idx, idx + 1 < pts.size()};
}

BestEpochReport best_epoch_summary(const RunSet& rs, const DNFit& dn) {
  BestEpochReport rep;
  for (const auto& run : rs.runs()) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < run.checkpoints.size(); ++i) {
      const double l = run.checkpoints[i].eval_loss;
      if (!std::isfinite(l)) continue;
      if (!best || l < run.checkpoints[*best].eval_loss) best = i;
    }
    if (!best) continue;
    RunEpochs e;
    e.run_id = run.run_id;
    e.curriculum = run.curriculum;
    e.n_params = run.n_params;
    e.d_finetune = run.d_finetune;
    e.epochs_at_best = run.checkpoints[*best].data_seen / static_cast<double>(run.d_finetune);
    e.possibly_truncated = *best + 1 == run.checkpoints.size();
    e.ratio = static_cast<double>(run.d_finetune) / dn.at(static_cast<double>(run.n_params));
    e.bucket = static_cast<int>(std::floor(std::log10(e.ratio)));
    rep.runs.push_back(std::move(e));
  }

  std::map<std::pair<int, Curriculum>, std::pair<std::size_t, double>> acc;
  for (const auto& e : rep.runs) {
    auto& [count, sum] = acc[{e.bucket, e.curriculum}];
    ++count;
    sum += e.epochs_at_best;
  }
  for (const auto& [key, v] : acc) {
    rep.buckets.push_back({key.first, key.second, v.first, v.second / static_cast<double>(v.first)});
  }
  for (const auto& b : rep.buckets) {
    if (b.curriculum != Curriculum::kFromScratch) continue;
    auto it = acc.find({b.bucket, Curriculum::kFinetuned});
    if (it == acc.end()) continue;
    const double ft = it->second.second / static_cast<double>(it->second.first);
    rep.comparisons.push_back({b.bucket, b.mean_epochs, ft, b.mean_epochs / ft});
  }
  return rep;
}

void to_json(nlohmann::json& j, const FrontierPoint& p) {
  j = nlohmann::json{{"compute", p.compute}, {"loss", p.loss}, {"run_id", p.run_id}};
}

void to_json(nlohmann::json& j, const ConvergedCompute& c) {
  j = nlohmann::json{{"compute", c.compute}, {"loss", c.loss}, {"index", c.index}, {"converged", c.converged}};
}

void to_json(nlohmann::json& j, const BestEpochReport& r) {
  auto runs = nlohmann::json::array();
  for (const auto& e : r.runs) {
    runs.push_back({{"run_id", e.run_id},
                    {"curriculum", to_string(e.curriculum)},
                    {"n_params", e.n_params},
                    {"d_finetune", e.d_finetune},
                    {"epochs_at_best", e.epochs_at_best},
                    {"possibly_truncated", e.possibly_truncated},
                    {"ratio", e.ratio},
                    {"bucket", e.bucket}});
  }
  auto buckets = nlohmann::json::array();
  for (const auto& b : r.buckets) {
    buckets.push_back({{"bucket", b.bucket},
                       {"curriculum", to_string(b.curriculum)},
                       {"count", b.count},
                       {"mean_epochs", b.mean_epochs}});
  }
  auto comparisons = nlohmann::json::array();
  for (const auto& c : r.comparisons) {
    comparisons.push_back({{"bucket", c.bucket},
                           {"from_scratch_mean", c.from_scratch_mean},
                           {"finetuned_mean", c.finetuned_mean},
                           {"ratio", c.ratio}});
  }
  j = nlohmann::json{{"runs", runs}, {"buckets", buckets}, {"comparisons", comparisons}};
}

}  // namespace xferlaw
