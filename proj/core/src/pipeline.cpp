// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/pipeline.hpp"

#include <map>

#include <nlohmann/json.hpp>

#include "xferlaw/error.hpp"

namespace xferlaw {

namespace {

std::vector<LossCurve> from_scratch_data_curves(const RunSet& rs) {
  std::vector<LossCurve> out;
  for (auto& c : build_curves(rs, Axis::kData, Level::kAcrossRuns).curves) {
    if (c.curriculum == Curriculum::kFromScratch) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

PipelineResult run_pipeline(const RunSet& rs, const PipelineOptions& options) {
  PipelineResult out;
  out.table = transfer_table(rs, options.table);

  const auto baselines = from_scratch_data_curves(rs);
  out.dn = estimate_dn(baselines, options.dn);
  for (const auto& s : out.dn.skipped) out.warnings.push_back("D(N): " + s);

  for (const auto& r : filter_low_regime(out.table, out.dn, options.regime)) {
    if (r.usable_for_fit()) out.fit_rows.push_back(r);
  }
  if (options.drop_sparse_groups) {
    std::map<std::int64_t, std::size_t> counts;
    for (const auto& r : out.fit_rows) ++counts[r.d_finetune];
    std::erase_if(out.fit_rows, [&](const EffectiveDataRow& r) {
      return counts[r.d_finetune] < 2;
    });
    for (const auto& [d, c] : counts) {
      if (c < 2) {
        out.warnings.push_back("dropped d_finetune=" + std::to_string(d) + ": fewer than 2 usable low-regime rows");
      }
    }
  }
  out.coefficients = fit_transfer_fit_of_fits(out.fit_rows, options.fit_of_fits);

  try {
    out.direct = fit_transfer_direct(out.fit_rows);
  } catch (const Error& e) {
    out.warnings.push_back(std::string("direct fit: ") + e.what());
  }
  if (options.fit_surface) {
    try {
      out.surface = fit_global_fromscratch(baselines);
    } catch (const Error& e) {
      out.warnings.push_back(std::string("surface fit: ") + e.what());
    }
  }
  out.ossification = ossification_report(out.table, out.dn, options.regime);
  return out;
}

void to_json(nlohmann::json& j, const PipelineResult& r) {
  std::size_t by_status[4] = {0, 0, 0, 0};
  for (const auto& row : r.table) ++by_status[static_cast<int>(row.status)];
  nlohmann::json status = nlohmann::json::object();
  for (RowStatus s : {RowStatus::kOk, RowStatus::kExtrapolated, RowStatus::kNotAttainable, RowStatus::kNotConverged}) {
    status[std::string(to_string(s))] = by_status[static_cast<int>(s)];
  }
  j = nlohmann::json{{"coefficients", r.coefficients},
                     {"direct", r.direct ? nlohmann::json(*r.direct) : nlohmann::json(nullptr)},
                     {"surface", r.surface ? nlohmann::json(*r.surface) : nlohmann::json(nullptr)},
                     {"d_of_n", r.dn},
                     {"table_rows", r.table.size()},
                     {"table_status", status},
                     {"fit_rows", r.fit_rows.size()},
                     {"ossification", r.ossification},
                     {"warnings", r.warnings}};
}

}  // namespace xferlaw
