// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

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

/// D_T = k * D_F^alpha * N^beta, with D in characters and N in parameters.
struct TransferCoefficients {
  double k = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  /// (d_finetune, n_star) per fine-tuning group; filled by the fit-of-fits.
  std::vector<std::pair<double, double>> per_df_nstar;
  /// Stage diagnostics, keyed by a short stage name.
  std::vector<std::pair<std::string, FitResult>> diagnostics;

  /// Throws InvalidArgument unless k > 0, alpha in [0, 1), beta in (0, 1).
  void validate() const;
};

void to_json(nlohmann::json& j, const TransferCoefficients& c);
void from_json(const nlohmann::json& j, TransferCoefficients& c);

/// Published coefficient sets for the two pre-training distributions.
TransferCoefficients text_preset();
TransferCoefficients mixture_preset();
/// "text" or "mixture"; nullopt otherwise.
std::optional<TransferCoefficients> preset_by_name(std::string_view name);

/// Zero-shot transfer is evaluated at D_F = 1 character.
inline constexpr double kZeroShotFinetune = 1.0;

/// k * D_F^alpha * N^beta. Throws InvalidArgument for N < 1 or D_F < 1.
double evaluate_transfer(const TransferCoefficients& c, double n_params, double d_finetune);

struct Multiplier {
  /// (D_F + D_T) / D_F.
  double exact = 1.0;
  /// k * N^beta / D_F^(1 - alpha), the large-transfer form.
  double approximate = 0.0;
};

Multiplier effective_multiplier(const TransferCoefficients& c, double n_params, double d_finetune);

struct FitOfFitsOptions {
  /// Use this exponent instead of the mean of the per-group exponents.
  std::optional<double> common_beta;
  /// Spread of per-group exponents above which a warning is recorded.
  double beta_spread_warning = 0.15;
};

/// Three-stage fit: per-D_F logit saturation fits, a shared exponent, then a
/// log-log line through (D_F, N*). Rows failing usable_for_fit() are ignored.
/// Throws FitError naming any group with fewer than two usable rows, or when
/// fewer than two groups remain.
TransferCoefficients fit_transfer_fit_of_fits(std::span<const EffectiveDataRow> rows,
                                              const FitOfFitsOptions& options = {});

/// Ordinary least squares on ln D_T = ln k + alpha ln D_F + beta ln N over
/// usable rows. Throws FitError when the design is rank deficient.
TransferCoefficients fit_transfer_direct(std::span<const EffectiveDataRow> rows);

}  // namespace xferlaw
