// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xferlaw/curve_fit.hpp"
#include "xferlaw/effective_data.hpp"
#include "xferlaw/transfer_law.hpp"

namespace xferlaw {

struct FinetunedLossPrediction {
  double n_params = 0.0;
  double d_finetune = 0.0;
  double d_transferred = 0.0;
  double d_effective = 0.0;
  /// Surface loss with D replaced by D_T alone (the low-data form).
  double loss_transfer_only = 0.0;
  /// Surface loss with D replaced by D_E = D_F + D_T.
  double loss_effective = 0.0;
};

FinetunedLossPrediction predict_finetuned_loss(const ScalingLawParams& surface, const TransferCoefficients& c,
                                               double n_params, double d_finetune);

void to_json(nlohmann::json& j, const FinetunedLossPrediction& p);

inline constexpr const char* kFewshotCaveat =
    "speculative: treats in-context characters as fine-tuning characters and extrapolates the fitted "
    "law far outside the data it was fit on";

struct FewshotEstimate {
  double n_params = 0.0;
  double context_chars = 1.0;
  double d_effective = 0.0;
  /// D_E(context) / D_E(1).
  double multiplier_vs_zero_shot = 1.0;
  std::string caveat = kFewshotCaveat;
};

/// Throws InvalidArgument for context_chars < 1.
FewshotEstimate fewshot_effective_data(const TransferCoefficients& c, double n_params, double context_chars);

void to_json(nlohmann::json& j, const FewshotEstimate& e);

struct TradeoffAdvice {
  double data_factor = 1.0;
  /// Model-size factor giving the same D_T: data_factor^(alpha / beta).
  double equivalent_model_factor = 1.0;
  std::string assumptions;
};

/// Throws InvalidArgument for data_factor <= 0.
TradeoffAdvice data_vs_model_tradeoff(const TransferCoefficients& c, double data_factor);

void to_json(nlohmann::json& j, const TradeoffAdvice& a);

struct SweepPoint {
  double n_params = 0.0;
  double loss = 0.0;
};

enum class Advice { kTradeoff, kDataDominant, kDataSaturated, kNeitherHelps };

std::string_view to_string(Advice a);

struct AdvisorReport {
  double n_params = 0.0;
  /// Largest subsample level, i.e. the full dataset.
  double d_finetune = 0.0;
  /// d ln L / d ln D_F at the full dataset.
  double data_slope = 0.0;
  /// d ln L / d ln N at the subsample's model size.
  double model_slope = 0.0;
  /// Data factor that buys the same loss reduction as a 10x larger model.
  double data_factor_per_10x_model = 0.0;
  /// d_finetune * (data_factor_per_10x_model - 1).
  double extra_characters_per_10x_model = 0.0;
  Advice advice = Advice::kTradeoff;
  std::string recommendation;
};

/// `subsamples`: rows for one model size at several fine-tuning set sizes
/// (typically 1%, 10% and 100% of the full set). `model_sweep`: losses versus
/// model size at the full set. Slopes are taken in log-loss against log-data
/// and log-size, with a three-point derivative when three or more levels are
/// available. Throws InvalidArgument when either sweep has fewer than two
/// usable levels or the rows mix model sizes.
AdvisorReport data_collection_advisor(std::span<const EffectiveDataRow> subsamples,
                                      std::span<const SweepPoint> model_sweep);

void to_json(nlohmann::json& j, const AdvisorReport& r);

}  // namespace xferlaw
