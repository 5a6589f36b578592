// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/plot_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <nlohmann/json.hpp>

#include "xferlaw/format.hpp"

namespace xferlaw {

void write_plot_csv(const PlotData& plot, std::ostream& out) {
  out << "x,y,series\n";
  for (const auto& s : plot.series) {
    for (const auto& p : s.points) out << format_double(p.x) << ',' << format_double(p.y) << ',' << s.label << '\n';
  }
}

void to_json(nlohmann::json& j, const PlotData& plot) {
  auto series = nlohmann::json::array();
  for (const auto& s : plot.series) {
    auto xs = nlohmann::json::array();
    auto ys = nlohmann::json::array();
    for (const auto& p : s.points) {
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
    series.push_back({{"label", s.label}, {"x", xs}, {"y", ys}});
  }
  j = nlohmann::json{{"name", plot.name},
                     {"x_label", plot.x_label},
                     {"y_label", plot.y_label},
                     {"x_log", plot.x_log},
                     {"y_log", plot.y_log},
                     {"series", series}};
}

namespace {

std::string df_label(std::int64_t d) {
  return "D_F=" + std::to_string(d);
}

void sort_points(PlotSeries& s) {
  std::sort(s.points.begin(), s.points.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
}

}  // namespace

PlotData fraction_vs_n_plot(std::span<const EffectiveDataRow> rows, const std::optional<TransferCoefficients>& fit) {
  PlotData plot{"fraction_vs_n", "n_params", "fraction_effective_data_from_transfer", true, false, {}};
  std::map<std::int64_t, PlotSeries> by_df;
  double n_lo = INFINITY;
  double n_hi = 0.0;
  for (const auto& r : rows) {
    if (!std::isfinite(r.fraction)) continue;
    auto& s = by_df[r.d_finetune];
    s.label = df_label(r.d_finetune);
    s.points.push_back({static_cast<double>(r.n_params), r.fraction});
    n_lo = std::min(n_lo, static_cast<double>(r.n_params));
    n_hi = std::max(n_hi, static_cast<double>(r.n_params));
  }
  for (auto& [d, s] : by_df) {
    sort_points(s);
    plot.series.push_back(std::move(s));
  }
  if (fit && n_hi > 0.0) {
    constexpr int kSamples = 41;
    for (const auto& [d, n_star] : fit->per_df_nstar) {
      PlotSeries s{"fit " + df_label(static_cast<std::int64_t>(d)), {}};
      for (int i = 0; i < kSamples; ++i) {
        const double n = n_lo * std::pow(n_hi / n_lo, static_cast<double>(i) / (kSamples - 1));
        s.points.push_back({n, 1.0 / (1.0 + std::pow(n_star / n, fit->beta))});
      }
      plot.series.push_back(std::move(s));
    }
  }
  return plot;
}

PlotData loss_vs_n_plot(std::span<const EffectiveDataRow> rows) {
  PlotData plot{"loss_vs_n", "n_params", "loss_nats_per_token", true, true, {}};
  std::map<std::int64_t, PlotSeries> by_df;
  for (const auto& r : rows) {
    if (!std::isfinite(r.loss)) continue;
    auto& s = by_df[r.d_finetune];
    s.label = df_label(r.d_finetune);
    s.points.push_back({static_cast<double>(r.n_params), r.loss});
  }
  for (auto& [d, s] : by_df) {
    sort_points(s);
    plot.series.push_back(std::move(s));
  }
  return plot;
}

PlotData transfer_over_dn_plot(std::span<const EffectiveDataRow> rows, const DNFit& dn) {
  PlotData plot{"transfer_over_dn", "d_finetune_over_d_of_n", "d_transferred_over_d_of_n", true, false, {}};
  std::map<std::int64_t, PlotSeries> by_n;
  for (const auto& r : rows) {
    if (!std::isfinite(r.d_transferred)) continue;
    const double d_of_n = dn.at(static_cast<double>(r.n_params));
    auto& s = by_n[r.n_params];
    s.label = "N=" + std::to_string(r.n_params);
    s.points.push_back({static_cast<double>(r.d_finetune) / d_of_n, r.d_transferred / d_of_n});
  }
  for (auto& [n, s] : by_n) {
    sort_points(s);
    plot.series.push_back(std::move(s));
  }
  return plot;
}

PlotData frontier_plot(std::span<const LossCurve> compute_curves, std::span<const FrontierPoint> frontier) {
  PlotData plot{"compute_frontier", "compute_flops", "loss_nats_per_token", true, true, {}};
  for (const auto& c : compute_curves) {
    PlotSeries s{c.run_id.empty() ? c.label() : c.run_id, {}};
    for (const auto& p : c.points) s.points.push_back({p.x, p.raw_loss});
    plot.series.push_back(std::move(s));
  }
  PlotSeries f{"frontier", {}};
  for (const auto& p : frontier) f.points.push_back({p.compute, p.loss});
  plot.series.push_back(std::move(f));
  return plot;
}

PlotData converged_compute_plot(const RunSet& rs, double rel_tol) {
  PlotData plot{"converged_compute", "dataset_size", "converged_compute_flops", true, true, {}};
  const CurveSet curves = build_curves(rs, Axis::kCompute, Level::kWithinRun);
  std::map<std::pair<Curriculum, std::int64_t>, PlotSeries> groups;
  for (const auto& c : curves.curves) {
    if (c.points.empty()) continue;
    const auto cc = converged_compute(c, rel_tol);
    auto& s = groups[{c.curriculum, c.n_params}];
    s.label = std::string(to_string(c.curriculum)) + " N=" + std::to_string(c.n_params);
    s.points.push_back({static_cast<double>(c.d_finetune), cc.compute});
  }
  for (auto& [k, s] : groups) {
    sort_points(s);
    plot.series.push_back(std::move(s));
  }
  return plot;
}

PlotData best_epoch_plot(const BestEpochReport& report) {
  PlotData plot{"best_epoch", "d_finetune_over_d_of_n", "epochs_at_best_loss", true, true, {}};
  std::map<Curriculum, PlotSeries> groups;
  for (const auto& e : report.runs) {
    auto& s = groups[e.curriculum];
    s.label = std::string(to_string(e.curriculum));
    s.points.push_back({e.ratio, e.epochs_at_best});
  }
  for (auto& [c, s] : groups) {
    sort_points(s);
    plot.series.push_back(std::move(s));
  }
  return plot;
}

}  // namespace xferlaw
