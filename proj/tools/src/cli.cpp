// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xferlaw/effective_data.hpp"
#include "xferlaw/error.hpp"
#include "xferlaw/frontier.hpp"
#include "xferlaw/pipeline.hpp"
#include "xferlaw/plot_data.hpp"
#include "xferlaw/predictor.hpp"
#include "xferlaw/regime.hpp"
#include "xferlaw/run_store.hpp"
#include "xferlaw/synth_oracle.hpp"
#include "xferlaw/transfer_law.hpp"

namespace xferlaw::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kSeedEnv = "XFERLAW_SEED";

const std::vector<std::pair<std::string, std::string>> kSubcommands{
    {"ingest", "validate and merge JSON-lines run files"},
    {"table", "effective-data table (D_E, D_T, fraction) as CSV"},
    {"fit-transfer", "fit transfer coefficients k, alpha, beta"},
    {"fit-scaling", "fit the from-scratch loss surface L(N, D)"},
    {"regime", "estimate D(N), classify regimes, report ossification"},
    {"predict", "fine-tuned loss, few-shot effective data, or data-collection advice"},
    {"tradeoff", "model-size factor equivalent to a fine-tuning data factor"},
    {"frontier", "compute frontier and converged compute"},
    {"epochs", "epochs at best loss, grouped by D_F / D(N)"},
    {"synth", "generate synthetic runs from a known ground truth"},
    {"pipeline", "full chain: table, D(N), regime filter, fit, reports and plot data"},
};

/// Thrown for bad flags or flag combinations; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown for filesystem failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Files produced by one invocation. Nothing touches disk until commit(), and
// commit() writes every file to a temporary sibling before renaming any.
class Artifacts {
 public:
  void add(fs::path path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }

  void add_json(fs::path path, const json& j) { add(std::move(path), j.dump(2) + "\n"); }

  void add_plot(const fs::path& dir, const PlotData& plot) {
    std::ostringstream csv;
    write_plot_csv(plot, csv);
    add(dir / (plot.name + ".csv"), csv.str());
    add_json(dir / (plot.name + ".json"), plot);
  }

  void commit() const {
    std::vector<fs::path> temps;
    auto cleanup = [&] {
      std::error_code ec;
      for (const auto& t : temps) fs::remove(t, ec);
    };
    for (const auto& [path, content] : files_) {
      std::error_code ec;
      if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
      fs::path tmp = path;
      tmp += ".tmp";
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (f) {
        temps.push_back(tmp);
        f << content;
        f.close();
      }
      if (!f) {
        cleanup();
        throw IoError("cannot write '" + path.string() + "'");
      }
    }
    for (std::size_t i = 0; i < files_.size(); ++i) {
      std::error_code ec;
      fs::rename(temps[i], files_[i].first, ec);
      if (ec) {
        cleanup();
        throw IoError("cannot rename into '" + files_[i].first.string() + "': " + ec.message());
      }
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

struct Options {
  std::vector<std::string> runs;
  std::string out;
  std::string report;
  std::string table;
  std::string json_out;
  std::string coeffs;
  std::string surface;
  std::string method = "fit-of-fits";
  std::string truth;
  std::string write_truth;
  std::string dn_file;
  std::string subsamples;
  std::string sweep;
  double convergence_tol = 1e-3;
  double threshold = kFromScratchThreshold;
  double tail_window = 1.2;
  double low = 0.10;
  double high = 1.0;
  double rel_tol = 1e-3;
  std::optional<double> common_beta;
  std::optional<double> n;
  std::optional<double> d_finetune;
  double context = 1.0;
  std::optional<double> data_factor;
  std::optional<double> k;
  std::optional<double> alpha;
  std::optional<double> beta;
  double noise = 0.0;
  std::uint64_t seed = 0;
  bool no_extrapolate = false;
  bool few_shot = false;
  bool advise = false;
  bool curves = false;
  bool no_surface = false;
  bool keep_sparse = false;
};

// ---------------------------------------------------------------------------
// Input helpers

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

RunSet load_runs(const std::vector<std::string>& paths) {
  if (paths.empty()) throw UsageError("--runs is required");
  RunSet merged;
  for (const auto& p : paths) {
    RunSet rs = ingest_runs_file(p);
    merged = merged.empty() ? std::move(rs) : RunSet::merge(merged, rs);
  }
  return merged;
}

TransferCoefficients load_coefficients(const Options& o) {
  const bool explicit_values = o.k || o.alpha || o.beta;
  if (explicit_values && !o.coeffs.empty()) throw UsageError("give either --coeffs or --k/--alpha/--beta");
  TransferCoefficients c;
  if (explicit_values) {
    if (!(o.k && o.alpha && o.beta)) throw UsageError("--k, --alpha and --beta must be given together");
    c.k = *o.k;
    c.alpha = *o.alpha;
    c.beta = *o.beta;
  } else if (o.coeffs.empty()) {
    throw UsageError("--coeffs (file, 'text' or 'mixture') or --k/--alpha/--beta is required");
  } else if (auto preset = preset_by_name(o.coeffs); preset && !fs::exists(o.coeffs)) {
    c = *preset;
  } else {
    try {
      c = read_json_file(o.coeffs).get<TransferCoefficients>();
    } catch (const json::exception& e) {
      throw ParseError(o.coeffs + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

ScalingLawParams load_surface(const std::string& spec) {
  if (spec.empty()) throw UsageError("--surface (file or 'synthetic') is required");
  ScalingLawParams p;
  if (spec == "synthetic" && !fs::exists(spec)) {
    p = default_synthetic_scaling();
  } else {
    const json j = read_json_file(spec);
    try {
      // Accept either bare parameters or a fit-scaling report.
      p = (j.contains("params") ? j.at("params") : j).get<ScalingLawParams>();
    } catch (const json::exception& e) {
      throw ParseError(spec + ": " + e.what());
    }
  }
  p.validate();
  return p;
}

std::vector<EffectiveDataRow> load_table(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read '" + path + "'");
  return read_transfer_table_csv(f);
}

std::vector<SweepPoint> load_sweep(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "n_params,loss") {
    throw ParseError(path + ": expected header 'n_params,loss'");
  }
  std::vector<SweepPoint> out;
  for (int lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      std::size_t used = 0;
      const double n = std::stod(line.substr(0, comma), &used);
      const double l = std::stod(line.substr(comma + 1));
      out.push_back({n, l});
    } catch (const std::exception&) {
      throw ParseError(path + ": line " + std::to_string(lineno) + ": expected 'n_params,loss'");
    }
  }
  return out;
}

DnOptions dn_options(const Options& o) {
  DnOptions d;
  d.threshold = o.threshold;
  d.tail_window = o.tail_window;
  return d;
}

RegimeThresholds regime_thresholds(const Options& o) {
  if (!(o.low > 0.0 && o.low < o.high)) throw UsageError("regime thresholds need 0 < --low < --high");
  return {o.low, o.high};
}

PipelineOptions pipeline_options(const Options& o) {
  PipelineOptions p;
  p.table.allow_extrapolation = !o.no_extrapolate;
  p.table.convergence_rel_tol = o.convergence_tol;
  p.dn = dn_options(o);
  p.regime = regime_thresholds(o);
  p.fit_of_fits.common_beta = o.common_beta;
  p.drop_sparse_groups = !o.keep_sparse;
  p.fit_surface = !o.no_surface;
  return p;
}

std::vector<LossCurve> from_scratch_data_curves(const RunSet& rs) {
  std::vector<LossCurve> out;
  for (auto& c : build_curves(rs, Axis::kData, Level::kAcrossRuns).curves) {
    if (c.curriculum == Curriculum::kFromScratch) out.push_back(std::move(c));
  }
  return out;
}

DNFit load_or_estimate_dn(const Options& o, const RunSet* rs) {
  if (!o.dn_file.empty()) {
    try {
      return read_json_file(o.dn_file).get<DNFit>();
    } catch (const json::exception& e) {
      throw ParseError(o.dn_file + ": " + e.what());
    }
  }
  if (rs == nullptr) throw UsageError("--dn or --runs is required");
  return estimate_dn(from_scratch_data_curves(*rs), dn_options(o));
}

json status_counts(std::span<const EffectiveDataRow> rows) {
  std::map<std::string, std::size_t> counts;
  for (RowStatus s : {RowStatus::kOk, RowStatus::kExtrapolated, RowStatus::kNotAttainable, RowStatus::kNotConverged}) {
    counts[std::string(to_string(s))] = 0;
  }
  for (const auto& r : rows) ++counts[std::string(to_string(r.status))];
  return counts;
}

json validation_json(const ValidationReport& v) {
  auto findings = json::array();
  for (const auto& f : v.findings) {
    findings.push_back({{"run_id", f.run_id},
                        {"kind", to_string(f.kind)},
                        {"checkpoint_index", f.checkpoint_index},
                        {"message", f.message}});
  }
  auto runs = json::array();
  for (const auto& r : v.runs) {
    runs.push_back({{"run_id", r.run_id},
                    {"converged", r.converged},
                    {"final_quartile_improvement", r.final_quartile_improvement}});
  }
  return {{"findings", findings}, {"runs", runs}};
}

// Compute-axis analyses need compute on every checkpoint; the message says
// which run lacks it.
struct ComputeOutputs {
  std::vector<PlotData> plots;
  json frontier;
  json converged;
};

ComputeOutputs compute_outputs(const RunSet& rs, double rel_tol) {
  ComputeOutputs out;
  const auto curves = build_curves(rs, Axis::kCompute, Level::kWithinRun).curves;
  out.frontier = json::object();
  for (Curriculum cur : {Curriculum::kFromScratch, Curriculum::kFinetuned}) {
    std::vector<LossCurve> subset;
    for (const auto& c : curves) {
      if (c.curriculum == cur) subset.push_back(c);
    }
    if (subset.empty()) continue;
    const auto frontier = pareto_frontier(subset);
    out.frontier[std::string(to_string(cur))] = frontier;
    PlotData plot = frontier_plot(subset, frontier);
    plot.name += "_" + std::string(to_string(cur));
    out.plots.push_back(std::move(plot));
  }
  out.converged = json::array();
  for (const auto& c : curves) {
    if (c.points.empty()) continue;
    json j = converged_compute(c, rel_tol);
    j["run_id"] = c.run_id;
    j["curriculum"] = to_string(c.curriculum);
    j["n_params"] = c.n_params;
    j["d_finetune"] = c.d_finetune;
    out.converged.push_back(std::move(j));
  }
  out.plots.push_back(converged_compute_plot(rs, rel_tol));
  return out;
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

// ---------------------------------------------------------------------------
// Subcommands

int run_ingest(const Options& o, std::ostream& out) {
  const RunSet rs = load_runs(o.runs);
  ValidationOptions vo;
  vo.convergence_rel_tol = o.convergence_tol;
  const ValidationReport v = validate_runs(rs, vo);
  Artifacts a;
  if (!o.out.empty()) a.add(o.out, export_runs(rs));
  if (!o.report.empty()) a.add_json(o.report, validation_json(v));
  a.commit();
  auto not_converged = json::array();
  for (const auto& r : v.runs) {
    if (!r.converged) not_converged.push_back(r.run_id);
  }
  emit(out, {{"runs", rs.size()},
             {"sources", rs.provenance().sources},
             {"findings", v.findings.size()},
             {"not_converged", not_converged}});
  return kExitOk;
}

int run_table(const Options& o, std::ostream& out) {
  const RunSet rs = load_runs(o.runs);
  TransferTableOptions to;
  to.allow_extrapolation = !o.no_extrapolate;
  to.convergence_rel_tol = o.convergence_tol;
  const auto rows = transfer_table(rs, to);
  std::ostringstream csv;
  write_transfer_table_csv(rows, csv);
  Artifacts a;
  if (!o.out.empty()) a.add(o.out, csv.str());
  if (!o.json_out.empty()) a.add_json(o.json_out, rows);
  a.commit();
  if (o.out.empty()) {
    out << csv.str();
  } else {
    emit(out, {{"rows", rows.size()}, {"status", status_counts(rows)}});
  }
  return kExitOk;
}

int run_fit_transfer(const Options& o, std::ostream& out) {
  if (o.runs.empty() == o.table.empty()) throw UsageError("give exactly one of --runs or --table");
  if (o.method != "fit-of-fits" && o.method != "direct") throw UsageError("--method must be fit-of-fits or direct");
  json report;
  TransferCoefficients c;
  if (!o.table.empty()) {
    // A supplied table is taken as already restricted to the low-data regime.
    const auto rows = load_table(o.table);
    FitOfFitsOptions fo;
    fo.common_beta = o.common_beta;
    c = o.method == "direct" ? fit_transfer_direct(rows) : fit_transfer_fit_of_fits(rows, fo);
    report = {{"coefficients", c}, {"fit_rows", rows.size()}};
  } else {
    PipelineOptions po = pipeline_options(o);
    po.fit_surface = false;
    const auto res = run_pipeline(load_runs(o.runs), po);
    if (o.method == "direct") {
      if (!res.direct) throw FitError("direct fit failed: see warnings");
      c = *res.direct;
    } else {
      c = res.coefficients;
    }
    report = {{"coefficients", c}, {"fit_rows", res.fit_rows.size()}, {"warnings", res.warnings}};
  }
  report["method"] = o.method;
  Artifacts a;
  if (!o.out.empty()) a.add_json(o.out, c);
  a.commit();
  emit(out, report);
  return kExitOk;
}

int run_fit_scaling(const Options& o, std::ostream& out) {
  const SurfaceFit fit = fit_global_fromscratch(from_scratch_data_curves(load_runs(o.runs)));
  Artifacts a;
  if (!o.out.empty()) a.add_json(o.out, fit);
  a.commit();
  emit(out, fit);
  return kExitOk;
}

int run_regime(const Options& o, std::ostream& out) {
  const RegimeThresholds thresholds = regime_thresholds(o);
  if (o.n || o.d_finetune) {
    // Single-point classification against a stored or freshly estimated D(N).
    if (!(o.n && o.d_finetune)) throw UsageError("--n and --d-finetune must be given together");
    std::optional<RunSet> rs;
    if (o.dn_file.empty()) rs = load_runs(o.runs);
    const DNFit dn = load_or_estimate_dn(o, rs ? &*rs : nullptr);
    const RegimeLabel label = classify_regime(*o.d_finetune, *o.n, dn, thresholds);
    emit(out, {{"n_params", *o.n},
               {"d_finetune", *o.d_finetune},
               {"d_of_n", dn.at(*o.n)},
               {"ratio", label.ratio},
               {"regime", to_string(label.value)}});
    return kExitOk;
  }
  if (o.out.empty()) throw UsageError("--out DIR is required");
  const RunSet rs = load_runs(o.runs);
  TransferTableOptions to;
  to.allow_extrapolation = !o.no_extrapolate;
  to.convergence_rel_tol = o.convergence_tol;
  const auto rows = transfer_table(rs, to);
  const DNFit dn = load_or_estimate_dn(o, &rs);
  const auto report = ossification_report(rows, dn, thresholds);

  std::map<std::string, std::size_t> by_regime{{"low", 0}, {"medium", 0}, {"high", 0}};
  for (const auto& r : rows) {
    ++by_regime[std::string(to_string(
        classify_regime(static_cast<double>(r.d_finetune), static_cast<double>(r.n_params), dn, thresholds).value))];
  }
  const fs::path dir = o.out;
  Artifacts a;
  a.add_json(dir / "d_of_n.json", dn);
  a.add_json(dir / "ossification.json", report);
  std::ostringstream csv;
  write_ossification_csv(report, csv);
  a.add(dir / "ossification.csv", csv.str());
  a.add_plot(dir / "plots", transfer_over_dn_plot(rows, dn));
  a.commit();
  emit(out, {{"d_of_n", {{"coefficient", dn.coefficient}, {"exponent", dn.exponent}}},
             {"rows_by_regime", by_regime},
             {"ossified", report.ossified.size()},
             {"skipped_sizes", dn.skipped}});
  return kExitOk;
}

int run_predict(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.few_shot && o.advise) throw UsageError("--few-shot and --advise are exclusive");
  json report;
  if (o.advise) {
    if (o.subsamples.empty() || o.sweep.empty()) throw UsageError("--advise needs --subsamples and --sweep");
    const auto rows = load_table(o.subsamples);
    const auto sweep = load_sweep(o.sweep);
    report = {{"inputs", {{"subsamples", o.subsamples}, {"sweep", o.sweep}}},
              {"advice", data_collection_advisor(rows, sweep)}};
  } else if (o.few_shot) {
    if (!o.n) throw UsageError("--n is required");
    const auto c = load_coefficients(o);
    const auto e = fewshot_effective_data(c, *o.n, o.context);
    err << "warning: " << e.caveat << "\n";
    report = {{"inputs", {{"n_params", *o.n}, {"context_chars", o.context}}},
              {"coefficients", {{"k", c.k}, {"alpha", c.alpha}, {"beta", c.beta}}},
              {"few_shot", e}};
  } else {
    if (!o.n || !o.d_finetune) throw UsageError("--n and --d-finetune are required");
    const auto c = load_coefficients(o);
    const auto s = load_surface(o.surface);
    report = {{"inputs", {{"n_params", *o.n}, {"d_finetune", *o.d_finetune}}},
              {"coefficients", {{"k", c.k}, {"alpha", c.alpha}, {"beta", c.beta}}},
              {"surface", s},
              {"prediction", predict_finetuned_loss(s, c, *o.n, *o.d_finetune)}};
  }
  Artifacts a;
  if (!o.out.empty()) a.add_json(o.out, report);
  a.commit();
  emit(out, report);
  return kExitOk;
}

int run_tradeoff(const Options& o, std::ostream& out) {
  if (!o.data_factor) throw UsageError("--data-factor is required");
  const auto c = load_coefficients(o);
  const json report = {{"coefficients", {{"k", c.k}, {"alpha", c.alpha}, {"beta", c.beta}}},
                       {"tradeoff", data_vs_model_tradeoff(c, *o.data_factor)}};
  Artifacts a;
  if (!o.out.empty()) a.add_json(o.out, report);
  a.commit();
  emit(out, report);
  return kExitOk;
}

int run_frontier(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("--out DIR is required");
  const RunSet rs = load_runs(o.runs);
  const auto co = compute_outputs(rs, o.rel_tol);
  const fs::path dir = o.out;
  Artifacts a;
  a.add_json(dir / "frontier.json", co.frontier);
  a.add_json(dir / "converged_compute.json", co.converged);
  for (const auto& p : co.plots) a.add_plot(dir / "plots", p);
  a.commit();
  json summary = json::object();
  for (const auto& [cur, pts] : co.frontier.items()) summary[cur] = pts.size();
  emit(out, {{"frontier_points", summary}, {"runs", co.converged.size()}});
  return kExitOk;
}

int run_epochs(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("--out DIR is required");
  const RunSet rs = load_runs(o.runs);
  const DNFit dn = load_or_estimate_dn(o, &rs);
  const auto report = best_epoch_summary(rs, dn);
  const fs::path dir = o.out;
  Artifacts a;
  a.add_json(dir / "best_epoch.json", report);
  a.add_plot(dir / "plots", best_epoch_plot(report));
  a.commit();
  json comparisons = json::array();
  for (const auto& c : report.comparisons) comparisons.push_back({{"bucket", c.bucket}, {"ratio", c.ratio}});
  emit(out, {{"runs", report.runs.size()}, {"comparisons", comparisons}});
  return kExitOk;
}

int run_synth(const Options& o, std::ostream& out) {
  GroundTruth gt;
  if (!o.truth.empty()) {
    try {
      gt = read_json_file(o.truth).get<GroundTruth>();
    } catch (const json::exception& e) {
      throw ParseError(o.truth + ": " + e.what());
    }
  }
  gt.seed = o.seed;
  if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      gt.seed = std::stoull(env, &used);
      if (used != std::string_view(env).size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError(std::string(kSeedEnv) + " must be a non-negative integer, got '" + env + "'");
    }
  }
  if (o.noise != 0.0) gt.noise_sigma = o.noise;
  if (o.curves) gt.curves.enabled = true;
  gt.validate();
  const RunSet rs = generate_all(gt);
  const std::string jsonl = export_runs(rs);
  Artifacts a;
  if (!o.out.empty()) a.add(o.out, jsonl);
  if (!o.write_truth.empty()) a.add_json(o.write_truth, gt);
  a.commit();
  if (o.out.empty()) {
    out << jsonl;
  } else {
    emit(out, {{"runs", rs.size()}, {"seed", gt.seed}, {"noise_sigma", gt.noise_sigma}});
  }
  return kExitOk;
}

int run_pipeline_cmd(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("--out DIR is required");
  const RunSet rs = load_runs(o.runs);
  PipelineResult res = run_pipeline(rs, pipeline_options(o));

  const fs::path dir = o.out;
  const fs::path plots = dir / "plots";
  Artifacts a;
  a.add_json(dir / "coefficients.json", res.coefficients);
  a.add_json(dir / "d_of_n.json", res.dn);
  a.add_json(dir / "ossification.json", res.ossification);
  std::ostringstream table_csv;
  write_transfer_table_csv(res.table, table_csv);
  a.add(dir / "table.csv", table_csv.str());
  std::ostringstream oss_csv;
  write_ossification_csv(res.ossification, oss_csv);
  a.add(dir / "ossification.csv", oss_csv.str());
  if (res.surface) a.add_json(dir / "surface.json", *res.surface);

  a.add_plot(plots, fraction_vs_n_plot(res.fit_rows, res.coefficients));
  a.add_plot(plots, loss_vs_n_plot(res.table));
  a.add_plot(plots, transfer_over_dn_plot(res.table, res.dn));
  try {
    const auto co = compute_outputs(rs, o.rel_tol);
    for (const auto& p : co.plots) a.add_plot(plots, p);
    a.add_json(dir / "frontier.json", co.frontier);
    a.add_json(dir / "converged_compute.json", co.converged);
    const auto epochs = best_epoch_summary(rs, res.dn);
    a.add_json(dir / "best_epoch.json", epochs);
    a.add_plot(plots, best_epoch_plot(epochs));
  } catch (const Error& e) {
    res.warnings.push_back(std::string("compute analyses skipped: ") + e.what());
  }
  a.add_json(dir / "summary.json", res);
  a.commit();
  emit(out, {{"k", res.coefficients.k},
             {"alpha", res.coefficients.alpha},
             {"beta", res.coefficients.beta},
             {"fit_rows", res.fit_rows.size()},
             {"ossified", res.ossification.ossified.size()},
             {"warnings", res.warnings}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Argument handling

// Appends flags from a JSON config file for every key not already given on
// the command line. Top-level scalars apply to any subcommand; an object
// keyed by the subcommand name applies to that subcommand only.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!path) return args;
  const json cfg = read_json_file(*path);
  if (!cfg.is_object()) throw ParseError(*path + ": config must be a JSON object");

  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(args.begin() + 1, args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  auto scalar = [&](const std::string& key, const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float()) return v.dump();
    throw ParseError(*path + ": value for '" + key + "' must be a string, number, boolean or array");
  };
  std::vector<std::pair<std::string, json>> entries;
  for (const auto& [key, v] : cfg.items()) {
    if (v.is_object()) {
      if (key != args.front()) continue;
      for (const auto& [sub_key, sub_v] : v.items()) entries.emplace_back(sub_key, sub_v);
    } else {
      entries.emplace_back(key, v);
    }
  }
  for (const auto& [key, v] : entries) {
    if (given(key) || v.is_null()) continue;
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back("--" + key);
      continue;
    }
    args.push_back("--" + key);
    if (v.is_array()) {
      for (const auto& item : v) args.push_back(scalar(key, item));
    } else {
      args.push_back(scalar(key, v));
    }
  }
  return args;
}

void add_runs(CLI::App* s, Options& o, bool required = true) {
  auto* opt = s->add_option("--runs", o.runs, "JSON-lines run files (merged in order)")->expected(1, -1);
  if (required) opt->required();
}

void add_dn_options(CLI::App* s, Options& o) {
  s->add_option("--threshold", o.threshold, "fraction of infinite-data performance defining D(N)")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  s->add_option("--tail-window", o.tail_window, "fit D(N) curves on points with loss <= window x min (<= 0: all)")
      ->capture_default_str();
}

void add_regime_options(CLI::App* s, Options& o) {
  s->add_option("--low", o.low, "upper D_F/D(N) bound of the low-data regime (inclusive)")->capture_default_str();
  s->add_option("--high", o.high, "lower D_F/D(N) bound of the high-data regime (inclusive)")->capture_default_str();
}

void add_table_options(CLI::App* s, Options& o) {
  s->add_flag("--no-extrapolate", o.no_extrapolate, "fail on fine-tuned losses above the baseline range");
  s->add_option("--convergence-tol", o.convergence_tol, "relative final-quarter improvement counted as converged")
      ->capture_default_str();
}

void add_coefficient_options(CLI::App* s, Options& o) {
  s->add_option("--coeffs", o.coeffs, "coefficients JSON file, or preset 'text' / 'mixture'");
  s->add_option("--k", o.k, "transfer coefficient k");
  s->add_option("--alpha", o.alpha, "fine-tuning data exponent alpha");
  s->add_option("--beta", o.beta, "model size exponent beta");
}

}  // namespace

std::string usage() {
  std::ostringstream os;
  os << "usage: xferlaw <subcommand> [options] [--config FILE]\n\nsubcommands:\n";
  for (const auto& [name, help] : kSubcommands) {
    os << "  " << name << std::string(14 - name.size(), ' ') << help << "\n";
  }
  os << "\nRun 'xferlaw <subcommand> --help' for options. --config FILE reads flags from a JSON object;\n"
     << "flags on the command line win. " << kSeedEnv << " overrides --seed.\n";
  return os.str();
}

int dispatch(std::span<const std::string> raw_args, std::ostream& out, std::ostream& err) {
  auto fail = [&](std::string_view kind, std::string_view message, int code) {
    err << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
    return code;
  };
  if (raw_args.empty()) {
    err << usage();
    return kExitUsage;
  }
  const std::string& first = raw_args.front();
  if (first == "--help" || first == "-h" || first == "help") {
    out << usage();
    return kExitOk;
  }
  const bool known = std::any_of(kSubcommands.begin(), kSubcommands.end(),
                                 [&](const auto& s) { return s.first == first; });
  if (!known) {
    err << usage();
    return fail("usage", "unknown subcommand '" + first + "'", kExitUsage);
  }

  Options o;
  CLI::App app{"xferlaw", "xferlaw"};
  app.require_subcommand(1);
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : kSubcommands) subs[name] = app.add_subcommand(name, help);

  {
    auto* s = subs["ingest"];
    add_runs(s, o);
    s->add_option("--out", o.out, "write the merged runs as canonical JSON-lines");
    s->add_option("--report", o.report, "write the validation report as JSON");
    s->add_option("--convergence-tol", o.convergence_tol, "relative final-quarter improvement counted as converged")
        ->capture_default_str();
  }
  {
    auto* s = subs["table"];
    add_runs(s, o);
    s->add_option("--out", o.out, "CSV output (default: stdout)");
    s->add_option("--json", o.json_out, "also write the rows as JSON");
    add_table_options(s, o);
  }
  {
    auto* s = subs["fit-transfer"];
    add_runs(s, o, false);
    s->add_option("--table", o.table, "effective-data CSV already restricted to the low-data regime");
    s->add_option("--method", o.method, "fit-of-fits or direct")->capture_default_str();
    s->add_option("--common-beta", o.common_beta, "hold beta fixed instead of averaging per-group exponents");
    s->add_option("--out", o.out, "write coefficients JSON");
    s->add_flag("--keep-sparse", o.keep_sparse, "fail instead of dropping D_F groups with < 2 usable rows");
    add_table_options(s, o);
    add_dn_options(s, o);
    add_regime_options(s, o);
  }
  {
    auto* s = subs["fit-scaling"];
    add_runs(s, o);
    s->add_option("--out", o.out, "write the surface fit as JSON");
  }
  {
    auto* s = subs["regime"];
    add_runs(s, o, false);
    s->add_option("--out", o.out, "output directory");
    s->add_option("--dn", o.dn_file, "use a stored D(N) fit instead of estimating it");
    s->add_option("--n", o.n, "classify a single model size (with --d-finetune)");
    s->add_option("--d-finetune", o.d_finetune, "classify a single fine-tuning size (with --n)");
    add_table_options(s, o);
    add_dn_options(s, o);
    add_regime_options(s, o);
  }
  {
    auto* s = subs["predict"];
    s->add_flag("--few-shot", o.few_shot, "effective data of in-context examples");
    s->add_flag("--advise", o.advise, "data-collection advice from subsample and model sweeps");
    s->add_option("--n", o.n, "model size (non-embedding parameters)");
    s->add_option("--d-finetune", o.d_finetune, "fine-tuning characters");
    s->add_option("--context", o.context, "in-context characters for --few-shot")->capture_default_str();
    s->add_option("--surface", o.surface, "scaling-surface JSON, or 'synthetic'");
    s->add_option("--subsamples", o.subsamples, "effective-data CSV of D_F subsamples at one model size");
    s->add_option("--sweep", o.sweep, "CSV 'n_params,loss' of a model-size sweep at full D_F");
    s->add_option("--out", o.out, "also write the report JSON");
    add_coefficient_options(s, o);
  }
  {
    auto* s = subs["tradeoff"];
    s->add_option("--data-factor", o.data_factor, "multiplicative increase in fine-tuning data");
    s->add_option("--out", o.out, "also write the report JSON");
    add_coefficient_options(s, o);
  }
  {
    auto* s = subs["frontier"];
    add_runs(s, o);
    s->add_option("--out", o.out, "output directory");
    s->add_option("--rel-tol", o.rel_tol, "converged-compute tolerance")->capture_default_str();
  }
  {
    auto* s = subs["epochs"];
    add_runs(s, o);
    s->add_option("--out", o.out, "output directory");
    s->add_option("--dn", o.dn_file, "use a stored D(N) fit instead of estimating it");
    add_dn_options(s, o);
  }
  {
    auto* s = subs["synth"];
    s->add_option("--seed", o.seed, "noise seed (overridden by " + std::string(kSeedEnv) + ")")->capture_default_str();
    s->add_option("--noise", o.noise, "relative log-normal loss noise")->check(CLI::NonNegativeNumber);
    s->add_option("--truth", o.truth, "ground-truth JSON (defaults otherwise)");
    s->add_flag("--curves", o.curves, "emit multi-checkpoint training curves");
    s->add_option("--out", o.out, "JSON-lines output (default: stdout)");
    s->add_option("--write-truth", o.write_truth, "write the ground truth used as JSON");
  }
  {
    auto* s = subs["pipeline"];
    add_runs(s, o);
    s->add_option("--out", o.out, "output directory");
    s->add_option("--common-beta", o.common_beta, "hold beta fixed instead of averaging per-group exponents");
    s->add_flag("--keep-sparse", o.keep_sparse, "fail instead of dropping D_F groups with < 2 usable rows");
    s->add_flag("--no-surface", o.no_surface, "skip the from-scratch surface cross-check");
    s->add_option("--rel-tol", o.rel_tol, "converged-compute tolerance")->capture_default_str();
    add_table_options(s, o);
    add_dn_options(s, o);
    add_regime_options(s, o);
  }

  try {
    std::vector<std::string> args = expand_config({raw_args.begin(), raw_args.end()});
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      return fail("usage", e.what(), kExitUsage);
    }

    if (first == "ingest") return run_ingest(o, out);
    if (first == "table") return run_table(o, out);
    if (first == "fit-transfer") return run_fit_transfer(o, out);
    if (first == "fit-scaling") return run_fit_scaling(o, out);
    if (first == "regime") return run_regime(o, out);
    if (first == "predict") return run_predict(o, out, err);
    if (first == "tradeoff") return run_tradeoff(o, out);
    if (first == "frontier") return run_frontier(o, out);
    if (first == "epochs") return run_epochs(o, out);
    if (first == "synth") return run_synth(o, out);
    return run_pipeline_cmd(o, out);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), kExitUsage);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), kExitFailure);
  } catch (const IoError& e) {
    return fail("io_error", e.what(), kExitFailure);
  } catch (const json::exception& e) {
    return fail("parse_error", e.what(), kExitFailure);
  } catch (const fs::filesystem_error& e) {
    return fail("io_error", e.what(), kExitFailure);
  } catch (const std::exception& e) {
    return fail("internal_error", e.what(), kExitFailure);
  }
}

}  // namespace xferlaw::cli
