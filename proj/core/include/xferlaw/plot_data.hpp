// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xferlaw/curve_fit.hpp"
#include "xferlaw/effective_data.hpp"
#include "xferlaw/frontier.hpp"
#include "xferlaw/regime.hpp"
#include "xferlaw/transfer_law.hpp"

namespace xferlaw {

struct PlotSeries {
  std::string label;
  std::vector<Point2> points;
};

/// Renderer-agnostic figure data: labelled (x, y) series.
struct PlotData {
  std::string name;
  std::string x_label;
  std::string y_label;
  bool x_log = true;
  bool y_log = true;
  std::vector<PlotSeries> series;
};

/// Header x,y,series; one line per point.
void write_plot_csv(const PlotData& plot, std::ostream& out);
void to_json(nlohmann::json& j, const PlotData& plot);

/// Transferred fraction versus model size, one series per D_F, plus the
/// fitted logit curves when coefficients carry per-group N*.
PlotData fraction_vs_n_plot(std::span<const EffectiveDataRow> rows,
                            const std::optional<TransferCoefficients>& fit = std::nullopt);
/// Fine-tuned loss versus model size, one series per D_F.
PlotData loss_vs_n_plot(std::span<const EffectiveDataRow> rows);
/// D_T / D(N) versus D_F / D(N), one series per model size.
PlotData transfer_over_dn_plot(std::span<const EffectiveDataRow> rows, const DNFit& dn);
/// Every compute curve plus the frontier as its own series.
PlotData frontier_plot(std::span<const LossCurve> compute_curves, std::span<const FrontierPoint> frontier);
/// Converged compute versus dataset size, one series per (curriculum, N).
PlotData converged_compute_plot(const RunSet& rs, double rel_tol = 1e-3);
/// Epochs at best loss versus D_F / D(N), one series per curriculum.
PlotData best_epoch_plot(const BestEpochReport& report);

}  // namespace xferlaw
