// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/regime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xferlaw/error.hpp"
#include "xferlaw/format.hpp"

namespace xferlaw {

double DNFit::at(double n_params) const {
  return coefficient * std::pow(n_params, exponent);
}

void to_json(nlohmann::json& j, const DNFit& f) {
  auto points = nlohmann::json::array();
  for (const auto& [n, d] : f.per_n_points) points.push_back({{"n_params", n}, {"d_of_n", d}});
  auto per_n = nlohmann::json::array();
  for (const auto& p : f.per_n) {
    per_n.push_back({{"n_params", p.n_params},
                     {"d_of_n", p.d_of_n},
                     {"loss_inf", p.curve_fit.floor},
                     {"scale", p.curve_fit.scale},
                     {"exponent", p.curve_fit.exponent},
                     {"diagnostics", p.curve_fit.fit}});
  }
  j = nlohmann::json{{"coefficient", f.coefficient},
                     {"exponent", f.exponent},
                     {"per_n_points", points},
                     {"per_n", per_n},
                     {"skipped", f.skipped},
                     {"diagnostics", f.fit}};
}

void from_json(const nlohmann::json& j, DNFit& f) {
  f = DNFit{};
  f.coefficient = j.at("coefficient").get<double>();
  f.exponent = j.at("exponent").get<double>();
  if (auto it = j.find("per_n_points"); it != j.end()) {
    for (const auto& p : *it) f.per_n_points.emplace_back(p.at("n_params").get<double>(), p.at("d_of_n").get<double>());
  }
  f.skipped = j.value("skipped", std::vector<std::string>{});
  if (!(f.coefficient > 0.0 && f.exponent > 0.0)) throw InvalidArgument("D(N) coefficient and exponent must be positive");
}

double dn_from_curve_fit(const PowerLawConstFit& fit, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
  if (!(fit.floor > 0.0)) {
    std::ostringstream os;
    os << "fitted loss floor " << fit.floor << " is not positive";
    throw FitError(os.str());
  }
  if (!(fit.scale > 0.0) || !(fit.exponent > 0.0)) {
    throw FitError("curve has no decreasing power term; D(N) undefined");
  }
  // floor + (scale / D)^e = floor / threshold.
  const double gap = fit.floor * (1.0 / threshold - 1.0);
  return fit.scale * std::pow(gap, -1.0 / fit.exponent);
}

DNFit estimate_dn(std::span<const LossCurve> curves, const DnOptions& options) {
  DNFit out;
  for (const auto& c : curves) {
    const double n = static_cast<double>(c.n_params);
    if (c.points.size() < 4) {
      out.skipped.push_back(c.label() + ": needs at least 4 points, has " + std::to_string(c.points.size()));
      continue;
    }
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& p : c.points) lowest = std::min(lowest, p.loss);
    std::vector<Point2> pts;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      const auto& p = c.points[i];
      const bool in_window = options.tail_window <= 0.0 || p.loss <= options.tail_window * lowest;
      const bool in_last = i + options.min_tail_points >= c.points.size();
      if (in_window || in_last) pts.push_back({p.x, p.loss});
    }
    try {
      PerNDn entry;
      entry.n_params = n;
      entry.curve_fit = fit_powerlaw_plus_const(pts, options.fit);
      entry.d_of_n = dn_from_curve_fit(entry.curve_fit, options.threshold);
      if (!std::isfinite(entry.d_of_n) || !(entry.d_of_n > 0.0)) throw FitError("D(N) is not finite");
      out.per_n_points.emplace_back(n, entry.d_of_n);
      out.per_n.push_back(std::move(entry));
    } catch (const Error& e) {
      out.skipped.push_back(c.label() + ": " + e.what());
    }
  }
  if (out.per_n_points.size() < 2) {
    std::string msg = "D(N) needs at least 2 usable model sizes";
    for (const auto& s : out.skipped) msg += "; " + s;
    throw FitError(msg);
  }
  std::vector<Point2> line_pts;
  for (const auto& [n, d] : out.per_n_points) line_pts.push_back({n, d});
  const LineFit line = fit_loglog_line(line_pts);
  out.coefficient = std::pow(10.0, line.log10_intercept);
  out.exponent = line.exponent;
  out.fit = line.fit;
  if (!(out.exponent > 0.0)) {
    out.fit.warnings.push_back("D(N) does not grow with model size; exponent " + format_double(out.exponent));
  }
  return out;
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::kLow:
      return "low";
    case Regime::kMedium:
      return "medium";
    case Regime::kHigh:
      return "high";
  }
  return "low";
}

RegimeLabel classify_regime(double d_finetune, double n_params, const DNFit& dn,
                            const RegimeThresholds& thresholds) {
  RegimeLabel label;
  label.ratio = d_finetune / dn.at(n_params);
  if (label.ratio <= thresholds.low) {
    label.value = Regime::kLow;
  } else if (label.ratio >= thresholds.high) {
    label.value = Regime::kHigh;
  } else {
    label.value = Regime::kMedium;
  }
  return label;
}

std::vector<EffectiveDataRow> filter_low_regime(std::span<const EffectiveDataRow> rows, const DNFit& dn,
                                                const RegimeThresholds& thresholds) {
  std::vector<EffectiveDataRow> out;
  for (const auto& r : rows) {
    const auto label = classify_regime(static_cast<double>(r.d_finetune), static_cast<double>(r.n_params), dn,
                                       thresholds);
    if (label.value == Regime::kLow) out.push_back(r);
  }
  return out;
}

OssificationReport ossification_report(std::span<const EffectiveDataRow> rows, const DNFit& dn,
                                       const RegimeThresholds& thresholds) {
  OssificationReport report;
  for (const auto& r : rows) {
    ClassifiedRow c;
    c.row = r;
    c.regime = classify_regime(static_cast<double>(r.d_finetune), static_cast<double>(r.n_params), dn, thresholds);
    c.d_of_n = dn.at(static_cast<double>(r.n_params));
    c.transferred_over_dn = r.d_transferred / c.d_of_n;
    if (std::isfinite(r.d_transferred) && r.d_transferred < 0.0) {
      report.ossified.push_back(std::move(c));
    } else {
      report.not_ossified.push_back(std::move(c));
    }
  }
  for (Regime g : {Regime::kLow, Regime::kMedium, Regime::kHigh}) {
    RegimeSummary s;
    s.regime = g;
    double sum = 0.0;
    for (const auto& c : report.ossified) {
      if (c.regime.value != g) continue;
      ++s.count;
      sum += c.transferred_over_dn;
    }
    s.mean_transferred_over_dn =
        s.count ? sum / static_cast<double>(s.count) : std::numeric_limits<double>::quiet_NaN();
    report.by_regime.push_back(s);
  }
  return report;
}

namespace {

nlohmann::json classified_json(const ClassifiedRow& c) {
  nlohmann::json j = c.row;
  j["regime"] = to_string(c.regime.value);
  j["ratio"] = c.regime.ratio;
  j["d_of_n"] = c.d_of_n;
  j["transferred_over_dn"] = c.transferred_over_dn;
  return j;
}

}  // namespace

void to_json(nlohmann::json& j, const OssificationReport& r) {
  auto ossified = nlohmann::json::array();
  for (const auto& c : r.ossified) ossified.push_back(classified_json(c));
  auto summary = nlohmann::json::array();
  for (const auto& s : r.by_regime) {
    summary.push_back({{"regime", to_string(s.regime)},
                       {"count", s.count},
                       {"mean_transferred_over_dn", s.count ? nlohmann::json(s.mean_transferred_over_dn) : nlohmann::json()}});
  }
  j = nlohmann::json{{"ossified", ossified},
                     {"not_ossified_count", r.not_ossified.size()},
                     {"by_regime", summary}};
}

void write_ossification_csv(const OssificationReport& r, std::ostream& out) {
  out << "run_id,n_params,d_finetune,d_transferred,d_of_n,ratio,regime,transferred_over_dn\n";
  for (const auto& c : r.ossified) {
    out << c.row.run_id << ',' << c.row.n_params << ',' << c.row.d_finetune << ','
        << format_double(c.row.d_transferred) << ',' << format_double(c.d_of_n) << ','
        << format_double(c.regime.ratio) << ',' << to_string(c.regime.value) << ','
        << format_double(c.transferred_over_dn) << '\n';
  }
}

}  // namespace xferlaw
