// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/effective_data.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xferlaw/error.hpp"
#include "xferlaw/format.hpp"

namespace xferlaw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double json_number_or_nan(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) return kNaN;
  return it->get<double>();
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

std::string_view to_string(RowStatus s) {
  switch (s) {
    case RowStatus::kOk:
      return "ok";
    case RowStatus::kExtrapolated:
      return "extrapolated";
    case RowStatus::kNotAttainable:
      return "not_attainable";
    case RowStatus::kNotConverged:
      return "not_converged";
  }
  return "ok";
}

std::optional<RowStatus> parse_row_status(std::string_view text) {
  for (RowStatus s : {RowStatus::kOk, RowStatus::kExtrapolated, RowStatus::kNotAttainable,
                      RowStatus::kNotConverged}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

bool EffectiveDataRow::usable_for_fit() const {
  return status == RowStatus::kOk && std::isfinite(d_transferred) && d_transferred > 0.0 &&
         fraction > 0.0 && fraction < 1.0;
}

EffectiveDataAtLoss effective_data_at_loss(const LossCurve& baseline, double target_loss,
                                           bool allow_extrapolation) {
  const auto& pts = baseline.points;
  if (pts.size() < 2) {
    throw InvalidArgument("baseline " + baseline.label() + " needs at least 2 points");
  }
  if (!std::isfinite(target_loss)) throw InvalidArgument("target loss must be finite");

  const double highest = pts.front().loss;
  const double lowest = pts.back().loss;
  if (target_loss > highest) {
    if (!allow_extrapolation) {
      std::ostringstream os;
      os << "target loss " << target_loss << " is above the highest baseline loss " << highest
         << " of " << baseline.label();
      throw OutOfRange(os.str());
    }
    return {pts.front().x, true};
  }
  if (target_loss < lowest) {
    std::ostringstream os;
    os << "target loss " << target_loss << " is below the lowest baseline loss " << lowest << " of "
       << baseline.label();
    throw NotAttainable(os.str());
  }

  std::size_t i = 0;
  while (pts[i].loss > target_loss) ++i;
  if (pts[i].loss == target_loss || i == 0) return {pts[i].x, false};

  const auto& a = pts[i - 1];
  const auto& b = pts[i];
  const double t = (a.loss - target_loss) / (a.loss - b.loss);
  const double lx = std::log10(a.x) + t * (std::log10(b.x) - std::log10(a.x));
  return {std::pow(10.0, lx), false};
}

double fraction_from_transfer(double d_transferred, double d_finetune) {
  if (!(d_finetune >= 1.0)) {
    std::ostringstream os;
    os << "d_finetune must be at least 1, got " << d_finetune;
    throw InvalidArgument(os.str());
  }
  const double total = d_finetune + d_transferred;
  if (!(total > 0.0)) {
    std::ostringstream os;
    os << "fraction undefined: d_finetune + d_transferred = " << total << " <= 0";
    throw InvalidArgument(os.str());
  }
  return d_transferred / total;
}

std::vector<EffectiveDataRow> transfer_table(const RunSet& rs, const TransferTableOptions& options) {
  const CurveSet curves = build_curves(rs, Axis::kData, Level::kAcrossRuns);

  // Baselines keyed by model size; several from-scratch labels at one size
  // are pooled into one curve.
  std::map<std::int64_t, LossCurve> baselines;
  for (const auto& c : curves.curves) {
    if (c.curriculum != Curriculum::kFromScratch) continue;
    auto [it, inserted] = baselines.emplace(c.n_params, c);
    if (!inserted) {
      auto& merged = it->second;
      merged.points.insert(merged.points.end(), c.points.begin(), c.points.end());
      merged.members.insert(merged.members.end(), c.members.begin(), c.members.end());
      for (auto& p : merged.points) p.loss = p.raw_loss;
      clean_curve(merged.points);
    }
  }

  std::set<std::int64_t> missing;
  for (const auto& run : rs.runs()) {
    if (run.curriculum == Curriculum::kFinetuned && !baselines.contains(run.n_params)) {
      missing.insert(run.n_params);
    }
  }
  if (!missing.empty()) {
    std::string msg = "no from-scratch baseline for n_params:";
    for (auto n : missing) msg += " " + std::to_string(n);
    throw InvalidArgument(msg);
  }

  std::vector<EffectiveDataRow> rows;
  for (const auto& run : rs.runs()) {
    if (run.curriculum != Curriculum::kFinetuned) continue;
    EffectiveDataRow row;
    row.run_id = run.run_id;
    row.pretrain_label = run.pretrain_label;
    row.n_params = run.n_params;
    row.d_finetune = run.d_finetune;
    row.loss = run.best_loss().value_or(kNaN);

    const auto& base = baselines.at(run.n_params);
    bool attainable = std::isfinite(row.loss);
    if (attainable) {
      try {
        const auto est = effective_data_at_loss(base, row.loss, options.allow_extrapolation);
        const double d_f = static_cast<double>(run.d_finetune);
        row.d_transferred = est.d_effective - d_f;
        row.d_effective = d_f + row.d_transferred;
        row.extrapolated = est.extrapolated;
        row.fraction = row.d_effective > 0.0 ? row.d_transferred / row.d_effective : kNaN;
      } catch (const NotAttainable&) {
        attainable = false;
      }
    }
    if (!attainable) {
      row.d_effective = row.d_transferred = row.fraction = kNaN;
      row.status = RowStatus::kNotAttainable;
    } else if (row.extrapolated) {
      row.status = RowStatus::kExtrapolated;
    }
    if (attainable && !run_converged(run, options.convergence_rel_tol)) {
      row.status = RowStatus::kNotConverged;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

constexpr std::string_view kCsvHeader =
    "n_params,d_finetune,loss,d_effective,d_transferred,fraction,extrapolated,status";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no, std::string_view field) {
  if (cell.empty()) return kNaN;
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": field '" + std::string(field) +
                     "': not a number: " + cell);
  }
}

}  // namespace

void write_transfer_table_csv(std::span<const EffectiveDataRow> rows, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.n_params << ',' << r.d_finetune << ',' << format_double(r.loss) << ','
        << format_double(r.d_effective) << ',' << format_double(r.d_transferred) << ','
        << format_double(r.fraction) << ',' << (r.extrapolated ? "true" : "false") << ','
        << to_string(r.status) << '\n';
  }
}

std::vector<EffectiveDataRow> read_transfer_table_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("transfer table is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError("line 1: unexpected header: " + line);

  std::vector<EffectiveDataRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 8) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 8 columns, got " +
                       std::to_string(cells.size()));
    }
    EffectiveDataRow r;
    r.n_params = static_cast<std::int64_t>(parse_cell(cells[0], line_no, "n_params"));
    r.d_finetune = static_cast<std::int64_t>(parse_cell(cells[1], line_no, "d_finetune"));
    r.loss = parse_cell(cells[2], line_no, "loss");
    r.d_effective = parse_cell(cells[3], line_no, "d_effective");
    r.d_transferred = parse_cell(cells[4], line_no, "d_transferred");
    r.fraction = parse_cell(cells[5], line_no, "fraction");
    if (cells[6] != "true" && cells[6] != "false") {
      throw ParseError("line " + std::to_string(line_no) + ": field 'extrapolated': expected true/false");
    }
    r.extrapolated = cells[6] == "true";
    const auto status = parse_row_status(cells[7]);
    if (!status) throw ParseError("line " + std::to_string(line_no) + ": field 'status': unknown " + cells[7]);
    r.status = *status;
    rows.push_back(std::move(r));
  }
  return rows;
}

void to_json(nlohmann::json& j, const EffectiveDataRow& r) {
  j = nlohmann::json{{"run_id", r.run_id},
                     {"pretrain_label", r.pretrain_label},
                     {"n_params", r.n_params},
                     {"d_finetune", r.d_finetune},
                     {"loss", number_or_null(r.loss)},
                     {"d_effective", number_or_null(r.d_effective)},
                     {"d_transferred", number_or_null(r.d_transferred)},
                     {"fraction", number_or_null(r.fraction)},
                     {"extrapolated", r.extrapolated},
                     {"status", to_string(r.status)}};
}

void from_json(const nlohmann::json& j, EffectiveDataRow& r) {
  r = EffectiveDataRow{};
  r.run_id = j.value("run_id", std::string{});
  r.pretrain_label = j.value("pretrain_label", std::string{});
  r.n_params = j.at("n_params").get<std::int64_t>();
  r.d_finetune = j.at("d_finetune").get<std::int64_t>();
  r.loss = json_number_or_nan(j, "loss");
  r.d_effective = json_number_or_nan(j, "d_effective");
  r.d_transferred = json_number_or_nan(j, "d_transferred");
  r.fraction = json_number_or_nan(j, "fraction");
  r.extrapolated = j.value("extrapolated", false);
  const auto status = parse_row_status(j.value("status", std::string{"ok"}));
  if (!status) throw ParseError("unknown row status");
  r.status = *status;
}

}  // namespace xferlaw
