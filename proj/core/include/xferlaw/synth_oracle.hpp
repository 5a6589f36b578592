// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xferlaw/curve_fit.hpp"
#include "xferlaw/run_store.hpp"
#include "xferlaw/transfer_law.hpp"

namespace xferlaw {

/// Placeholder from-scratch surface for synthetic data. The exponent ratio
/// alpha_n / alpha_d = 0.8 keeps D(N) growing like N^0.8.
ScalingLawParams default_synthetic_scaling();

/// From-scratch training-set sizes. With `explicit_grid` empty, each model
/// size gets its own grid spanning 10^lo_decades .. 10^hi_decades times its
/// true D(N), `per_decade` points per decade, rounded to whole characters.
struct BaselineGrid {
  std::vector<std::int64_t> explicit_grid;
  double lo_decades = -4.5;
  double hi_decades = 2.0;
  int per_decade = 8;
};

/// Multi-checkpoint training curves. With enabled = false each run has one
/// checkpoint at its converged loss.
///
/// Shape in epochs e = data_seen / D with best epoch e*:
///   L(e) = L_conv * (1 + amplitude * ((e/e*)^-shape + shape*e/e* - 1 - shape))
/// which has its minimum L_conv exactly at e = e*. Checkpoints sit at
/// e* * 2^(j / points_per_octave) for j from -octaves_before*ppo to
/// octaves_after*ppo. Compute is 6 * N * data_seen.
struct CurveOptions {
  bool enabled = false;
  double amplitude = 0.5;
  double shape = 0.5;
  double best_epoch_from_scratch = 3.0;
  double best_epoch_finetuned = 1.0;
  int octaves_before = 4;
  int octaves_after = 2;
  int points_per_octave = 2;
};

struct GroundTruth {
  ScalingLawParams scaling = default_synthetic_scaling();
  TransferCoefficients transfer = text_preset();
  std::vector<std::int64_t> n_grid{100'000, 1'000'000, 10'000'000, 100'000'000, 1'000'000'000};
  /// Fine-tuning set sizes.
  std::vector<std::int64_t> d_grid{100'000, 1'000'000, 10'000'000, 100'000'000};
  BaselineGrid baseline;
  /// Standard deviation of the log-normal loss noise.
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string pretrain_label = "text";
  /// (n_params, d_finetune) cells whose effective data is planted at
  /// ossify_factor * D_F instead of D_F + D_T.
  std::vector<std::pair<std::int64_t, std::int64_t>> ossified_cells;
  double ossify_factor = 0.5;
  CurveOptions curves;

  /// Throws InvalidArgument for empty or non-positive grids, negative noise,
  /// or ossified cells outside the grid.
  void validate() const;
};

void to_json(nlohmann::json& j, const GroundTruth& gt);
void from_json(const nlohmann::json& j, GroundTruth& gt);

/// D at which L(N, D) = L(N, inf) / threshold, solved exactly.
double true_dn(const ScalingLawParams& s, double n_params, double threshold = 0.99);

/// Baseline grid for one model size.
std::vector<std::int64_t> baseline_grid(const GroundTruth& gt, std::int64_t n_params);

/// Multiplicative noise factor exp(eps) for a cell; depends only on (seed, N,
/// D) so a zero-transfer fine-tuned run reproduces the from-scratch value.
double noise_factor(const GroundTruth& gt, std::int64_t n_params, double data);

RunSet generate_fromscratch(const GroundTruth& gt);
RunSet generate_finetuned(const GroundTruth& gt);
/// From-scratch runs followed by fine-tuned runs.
RunSet generate_all(const GroundTruth& gt);

struct RoundtripTolerances {
  double k = 0.05;
  double alpha = 0.05;
  double beta = 0.05;
};

struct RoundtripReport {
  double k_rel_error = 0.0;
  double alpha_rel_error = 0.0;
  double beta_rel_error = 0.0;
  bool k_pass = true;
  bool alpha_pass = true;
  bool beta_pass = true;

  bool pass() const { return k_pass && alpha_pass && beta_pass; }
};

RoundtripReport roundtrip_check(const GroundTruth& gt, const TransferCoefficients& recovered,
                                const RoundtripTolerances& tol = {});

void to_json(nlohmann::json& j, const RoundtripReport& r);

}  // namespace xferlaw
