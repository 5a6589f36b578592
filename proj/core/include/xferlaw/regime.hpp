// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xferlaw/curve_fit.hpp"
#include "xferlaw/effective_data.hpp"

namespace xferlaw {

/// Fraction of the infinite-data loss used to define D(N) for from-scratch
/// curves, and the looser value used when intersecting fine-tuned curves.
inline constexpr double kFromScratchThreshold = 0.99;
inline constexpr double kFinetunedThreshold = 0.95;

struct DnOptions {
  /// D(N) solves loss_inf = threshold * L(D(N)).
  double threshold = kFromScratchThreshold;
  /// Only points with loss <= tail_window * (lowest loss) enter the per-N
  /// fit; values <= 0 use the whole curve.
  double tail_window = 1.2;
  /// Lower bound on the number of trailing points kept by the window.
  std::size_t min_tail_points = 4;
  PowerLawConstOptions fit;
};

struct PerNDn {
  double n_params = 0.0;
  double d_of_n = 0.0;
  PowerLawConstFit curve_fit;
};

/// D(N) = coefficient * N^exponent.
struct DNFit {
  double coefficient = 1.0;
  double exponent = 1.0;
  std::vector<std::pair<double, double>> per_n_points;
  std::vector<PerNDn> per_n;
  /// One message per model size whose curve could not produce D(N).
  std::vector<std::string> skipped;
  FitResult fit;

  double at(double n_params) const;
};

void to_json(nlohmann::json& j, const DNFit& f);
void from_json(const nlohmann::json& j, DNFit& f);

/// Closed-form D(N) of a fitted loss_inf + (scale / D)^exponent curve. Throws
/// FitError when the floor is not positive or the power term is absent.
double dn_from_curve_fit(const PowerLawConstFit& fit, double threshold = kFromScratchThreshold);

/// Per-N D(N) from each curve (needs >= 4 points), then a log-log line over
/// N. Curves that fail are listed in `skipped`; throws FitError when fewer
/// than two model sizes survive.
DNFit estimate_dn(std::span<const LossCurve> curves, const DnOptions& options = {});

enum class Regime { kLow, kMedium, kHigh };

std::string_view to_string(Regime r);

struct RegimeThresholds {
  /// ratio <= low is the low-data regime.
  double low = 0.10;
  /// ratio >= high is the high-data regime.
  double high = 1.0;
};

struct RegimeLabel {
  Regime value = Regime::kLow;
  /// D_F / D(N).
  double ratio = 0.0;
};

RegimeLabel classify_regime(double d_finetune, double n_params, const DNFit& dn,
                            const RegimeThresholds& thresholds = {});

/// Rows whose (D_F, N) falls in the low-data regime.
std::vector<EffectiveDataRow> filter_low_regime(std::span<const EffectiveDataRow> rows, const DNFit& dn,
                                                const RegimeThresholds& thresholds = {});

struct ClassifiedRow {
  EffectiveDataRow row;
  RegimeLabel regime;
  double d_of_n = 0.0;
  /// D_T / D(N).
  double transferred_over_dn = 0.0;
};

struct RegimeSummary {
  Regime regime = Regime::kLow;
  std::size_t count = 0;
  /// Mean D_T / D(N) over ossified rows in this regime; NaN when count == 0.
  double mean_transferred_over_dn = 0.0;
};

/// Ossified rows have D_T < 0. Every input row lands in exactly one of the
/// two lists.
struct OssificationReport {
  std::vector<ClassifiedRow> ossified;
  std::vector<ClassifiedRow> not_ossified;
  std::vector<RegimeSummary> by_regime;
};

OssificationReport ossification_report(std::span<const EffectiveDataRow> rows, const DNFit& dn,
                                       const RegimeThresholds& thresholds = {});

void to_json(nlohmann::json& j, const OssificationReport& r);
/// Ossified rows only. Header:
/// run_id,n_params,d_finetune,d_transferred,d_of_n,ratio,regime,transferred_over_dn
void write_ossification_csv(const OssificationReport& r, std::ostream& out);

}  // namespace xferlaw
