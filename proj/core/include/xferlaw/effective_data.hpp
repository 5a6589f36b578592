// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xferlaw/run_store.hpp"

namespace xferlaw {

enum class RowStatus { kOk, kExtrapolated, kNotAttainable, kNotConverged };

std::string_view to_string(RowStatus s);
std::optional<RowStatus> parse_row_status(std::string_view text);

/// Effective data for one fine-tuned run. Quantities are in characters. For
/// not_attainable rows the three data fields are NaN.
struct EffectiveDataRow {
  std::string run_id;
  std::string pretrain_label;
  std::int64_t n_params = 1;
  std::int64_t d_finetune = 1;
  double loss = 0.0;
  double d_effective = 0.0;
  /// May be negative when pre-training hurt.
  double d_transferred = 0.0;
  double fraction = 0.0;
  bool extrapolated = false;
  RowStatus status = RowStatus::kOk;

  /// Positive transfer with a finite in-range estimate from a converged run.
  bool usable_for_fit() const;
};

struct EffectiveDataAtLoss {
  double d_effective = 0.0;
  bool extrapolated = false;
};

/// Data at which `baseline` reaches `target_loss`, interpolating loss
/// linearly in log10(D). An exact grid hit returns the smallest grid D with
/// that loss. A target above the curve's highest loss returns the smallest D
/// flagged as extrapolated when `allow_extrapolation`, and throws OutOfRange
/// otherwise. A target below the lowest loss throws NotAttainable.
EffectiveDataAtLoss effective_data_at_loss(const LossCurve& baseline, double target_loss,
                                           bool allow_extrapolation = false);

/// D_T / (D_F + D_T). Throws InvalidArgument when D_F < 1 or D_F + D_T <= 0.
double fraction_from_transfer(double d_transferred, double d_finetune);

struct TransferTableOptions {
  bool allow_extrapolation = true;
  double convergence_rel_tol = 1e-3;
};

/// One row per fine-tuned run, in input order. The fine-tuned loss is the
/// run's best loss; the baseline is the from-scratch across-runs curve with
/// the same n_params. Throws InvalidArgument listing every n_params that has
/// fine-tuned runs but no from-scratch baseline.
std::vector<EffectiveDataRow> transfer_table(const RunSet& rs, const TransferTableOptions& options = {});

/// Header: n_params,d_finetune,loss,d_effective,d_transferred,fraction,extrapolated,status
void write_transfer_table_csv(std::span<const EffectiveDataRow> rows, std::ostream& out);
std::vector<EffectiveDataRow> read_transfer_table_csv(std::istream& in);

void to_json(nlohmann::json& j, const EffectiveDataRow& r);
void from_json(const nlohmann::json& j, EffectiveDataRow& r);

}  // namespace xferlaw
