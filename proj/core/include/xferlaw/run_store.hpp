// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xferlaw {

enum class Curriculum { kFromScratch, kFinetuned };

std::string_view to_string(Curriculum c);
/// Parses "from_scratch" / "finetuned"; returns nullopt for anything else.
std::optional<Curriculum> parse_curriculum(std::string_view text);

/// One evaluation point along a training run. Data is counted in
/// characters, compute in floating-point operations, loss in nats/token.
struct Checkpoint {
  double data_seen = 0.0;
  std::optional<double> compute;
  double eval_loss = 0.0;

  bool operator==(const Checkpoint&) const = default;
};

struct RunRecord {
  std::string run_id;
  Curriculum curriculum = Curriculum::kFromScratch;
  std::string pretrain_label;
  std::int64_t n_params = 1;
  /// Fine-tuning set size; for from-scratch runs, the training set size.
  std::int64_t d_finetune = 1;
  std::vector<Checkpoint> checkpoints;

  /// Lowest finite eval loss of the run, or nullopt if there is none.
  std::optional<double> best_loss() const;

  bool operator==(const RunRecord&) const = default;
};

struct Provenance {
  std::vector<std::string> sources;
  std::string ingested_at;
};

/// Immutable collection of runs with unique ids.
class RunSet {
 public:
  RunSet() = default;
  /// Throws InvalidArgument on duplicate run ids.
  explicit RunSet(std::vector<RunRecord> runs, Provenance provenance = {});

  const std::vector<RunRecord>& runs() const& noexcept { return runs_; }
  // By value on temporaries so `for (auto& r : make_runs().runs())` is safe.
  std::vector<RunRecord> runs() && noexcept { return std::move(runs_); }
  const Provenance& provenance() const noexcept { return provenance_; }
  std::size_t size() const noexcept { return runs_.size(); }
  bool empty() const noexcept { return runs_.empty(); }
  const RunRecord* find(std::string_view run_id) const;
  bool has_from_scratch() const;

  /// Concatenates two sets; provenance sources are merged.
  static RunSet merge(const RunSet& a, const RunSet& b);

 private:
  std::vector<RunRecord> runs_;
  Provenance provenance_;
};

// ---------------------------------------------------------------------------
// JSON-lines format
//
// One run per line, keys in this order:
//   run_id, curriculum, pretrain_label, n_params, d_finetune,
//   checkpoints: [{data_seen, compute, eval_loss}, ...]
// A missing compute is written as null. A non-finite loss is written as null
// and read back as NaN so that validate_runs can report it.

/// Reads every line of `in`. Blank lines are skipped. Throws ParseError naming
/// the line number and field for malformed input, and InvalidArgument naming
/// both line numbers for a duplicate run_id.
RunSet ingest_runs(std::istream& in, const std::string& source_name = "<stream>");
RunSet ingest_runs_file(const std::filesystem::path& path);

std::string to_jsonl_line(const RunRecord& run);
void export_runs(const RunSet& rs, std::ostream& out);
std::string export_runs(const RunSet& rs);

// ---------------------------------------------------------------------------
// Validation

enum class FindingKind {
  kDataSeenNotIncreasing,
  kComputeDecreasing,
  kComputeMissing,
  kNonFiniteLoss,
  kNonPositiveLoss,
  kNotConverged,
};

std::string_view to_string(FindingKind k);

struct Finding {
  std::string run_id;
  FindingKind kind;
  std::size_t checkpoint_index = 0;
  std::string message;
};

struct ValidationOptions {
  /// Relative improvement of the best loss over the final quarter of the
  /// checkpoints below which a run counts as converged.
  double convergence_rel_tol = 1e-3;
};

struct RunStatus {
  std::string run_id;
  bool converged = false;
  double final_quartile_improvement = 0.0;
};

struct ValidationReport {
  std::vector<Finding> findings;
  std::vector<RunStatus> runs;

  bool converged(std::string_view run_id) const;
};

ValidationReport validate_runs(const RunSet& rs, const ValidationOptions& options = {});

/// True when the best loss improves by less than `rel_tol` (relative) over the
/// final 25% of checkpoints. `improvement` receives the measured value.
bool run_converged(const RunRecord& run, double rel_tol, double* improvement = nullptr);

// ---------------------------------------------------------------------------
// Loss curves

enum class Axis { kData, kCompute };
enum class Level { kWithinRun, kAcrossRuns };

struct CurvePoint {
  double x = 0.0;
  /// Observed loss at x.
  double raw_loss = 0.0;
  /// Running minimum of raw_loss up to and including x.
  double loss = 0.0;
  std::string run_id;
};

struct LossCurve {
  Curriculum curriculum = Curriculum::kFromScratch;
  std::string pretrain_label;
  std::int64_t n_params = 1;
  Axis axis = Axis::kData;
  Level level = Level::kWithinRun;
  /// Source run for within-run curves; empty for across-runs curves.
  std::string run_id;
  /// d_finetune of the source run (within-run curves only).
  std::int64_t d_finetune = 0;
  /// Runs contributing to the curve.
  std::vector<std::string> members;
  /// Sorted by strictly increasing x; loss non-increasing.
  std::vector<CurvePoint> points;

  std::string label() const;
};

struct CurveSet {
  std::vector<LossCurve> curves;
  /// Human-readable notes about groups or runs that produced no curve.
  std::vector<std::string> skipped;
};

/// within_run: one curve per run over its checkpoints. across_runs: one curve
/// per (curriculum, pretrain_label, n_params) of best loss versus d_finetune.
/// Axis::kCompute with a missing compute value throws InvalidArgument naming
/// the run.
CurveSet build_curves(const RunSet& rs, Axis axis, Level level);

/// Sorts by x, merges equal x keeping the lower loss, and fills `loss` with
/// the running minimum of `raw_loss`.
void clean_curve(std::vector<CurvePoint>& points);

}  // namespace xferlaw
