// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xferlaw/regime.hpp"
#include "xferlaw/run_store.hpp"

namespace xferlaw {

struct FrontierPoint {
  double compute = 0.0;
  double loss = 0.0;
  std::string run_id;

  bool operator==(const FrontierPoint&) const = default;
};

/// Non-dominated checkpoints over all compute-axis curves: ascending compute,
/// strictly decreasing loss. Uses the observed (raw) losses. Throws
/// InvalidArgument when no curve carries compute data.
std::vector<FrontierPoint> pareto_frontier(std::span<const LossCurve> curves);

struct ConvergedCompute {
  double compute = 0.0;
  double loss = 0.0;
  std::size_t index = 0;
  bool converged = false;
};

/// First point whose running-best loss is within `rel_tol` (relative) of the
/// curve's final best. When only the last point qualifies the run is
/// reported as not converged. Throws InvalidArgument for an empty curve.
ConvergedCompute converged_compute(const LossCurve& curve, double rel_tol = 1e-3);

struct RunEpochs {
  std::string run_id;
  Curriculum curriculum = Curriculum::kFromScratch;
  std::int64_t n_params = 1;
  std::int64_t d_finetune = 1;
  /// data_seen at the best checkpoint divided by d_finetune.
  double epochs_at_best = 0.0;
  /// The best checkpoint was the last one, so training may have stopped early.
  bool possibly_truncated = false;
  /// D_F / D(N).
  double ratio = 0.0;
  /// floor(log10(ratio)).
  int bucket = 0;
};

struct EpochBucket {
  int bucket = 0;
  Curriculum curriculum = Curriculum::kFromScratch;
  std::size_t count = 0;
  double mean_epochs = 0.0;
};

struct EpochComparison {
  int bucket = 0;
  double from_scratch_mean = 0.0;
  double finetuned_mean = 0.0;
  /// from_scratch_mean / finetuned_mean.
  double ratio = 0.0;
};

struct BestEpochReport {
  std::vector<RunEpochs> runs;
  std::vector<EpochBucket> buckets;
  /// Buckets that have both curricula.
  std::vector<EpochComparison> comparisons;
};

/// Runs without a finite loss are skipped.
BestEpochReport best_epoch_summary(const RunSet& rs, const DNFit& dn);

void to_json(nlohmann::json& j, const FrontierPoint& p);
void to_json(nlohmann::json& j, const ConvergedCompute& c);
void to_json(nlohmann::json& j, const BestEpochReport& r);

}  // namespace xferlaw
