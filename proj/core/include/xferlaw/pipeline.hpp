// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xferlaw/curve_fit.hpp"
#include "xferlaw/effective_data.hpp"
#include "xferlaw/regime.hpp"
#include "xferlaw/run_store.hpp"
#include "xferlaw/transfer_law.hpp"

namespace xferlaw {

struct PipelineOptions {
  TransferTableOptions table;
  DnOptions dn;
  RegimeThresholds regime;
  FitOfFitsOptions fit_of_fits;
  /// Drop fine-tuning groups left with fewer than two usable low-regime rows
  /// (recorded as warnings) instead of failing the fit.
  bool drop_sparse_groups = true;
  bool fit_surface = true;
};

struct PipelineResult {
  std::vector<EffectiveDataRow> table;
  DNFit dn;
  /// Low-regime rows with positive transfer that entered the fits.
  std::vector<EffectiveDataRow> fit_rows;
  TransferCoefficients coefficients;
  std::optional<TransferCoefficients> direct;
  std::optional<SurfaceFit> surface;
  OssificationReport ossification;
  std::vector<std::string> warnings;
};

/// Effective-data table, D(N), low-regime filter, fit-of-fits (plus the
/// direct fit and the from-scratch surface as cross-checks) and the
/// ossification report. Failures of the cross-checks become warnings;
/// failures of the main chain propagate.
PipelineResult run_pipeline(const RunSet& rs, const PipelineOptions& options = {});

/// Summary document written as report.json by the command-line tool.
void to_json(nlohmann::json& j, const PipelineResult& r);

}  // namespace xferlaw
