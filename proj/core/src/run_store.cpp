// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/run_store.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "xferlaw/error.hpp"

namespace xferlaw {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

[[noreturn]] void fail(std::size_t line, std::string_view field, std::string_view what) {
  std::ostringstream os;
  os << "line " << line << ": field '" << field << "': " << what;
  throw ParseError(os.str());
}

const ordered_json& require(const ordered_json& obj, const char* key, std::size_t line,
                            std::string_view field_path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(line, field_path, "missing");
  return *it;
}

std::int64_t read_count(const ordered_json& v, std::size_t line, std::string_view field) {
  if (v.is_number_integer()) {
    const auto n = v.get<std::int64_t>();
    if (n < 1) fail(line, field, "must be >= 1");
    return n;
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (!std::isfinite(d) || d != std::floor(d)) fail(line, field, "must be an integer");
    if (d < 1.0) fail(line, field, "must be >= 1");
    if (d > 9.0e18) fail(line, field, "too large");
    return static_cast<std::int64_t>(d);
  }
  fail(line, field, "must be a number");
}

double read_number(const ordered_json& v, std::size_t line, std::string_view field) {
  if (!v.is_number()) fail(line, field, "must be a number");
  return v.get<double>();
}

RunRecord parse_record(const std::string& text, std::size_t line) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(line, "<record>", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(line, "<record>", "must be a JSON object");

  RunRecord r;
  const auto& id = require(j, "run_id", line, "run_id");
  if (!id.is_string() || id.get<std::string>().empty()) fail(line, "run_id", "must be a non-empty string");
  r.run_id = id.get<std::string>();

  const auto& cur = require(j, "curriculum", line, "curriculum");
  if (!cur.is_string()) fail(line, "curriculum", "must be a string");
  auto parsed = parse_curriculum(cur.get<std::string>());
  if (!parsed) fail(line, "curriculum", "must be \"from_scratch\" or \"finetuned\"");
  r.curriculum = *parsed;

  if (auto it = j.find("pretrain_label"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) fail(line, "pretrain_label", "must be a string");
    r.pretrain_label = it->get<std::string>();
  }

  r.n_params = read_count(require(j, "n_params", line, "n_params"), line, "n_params");
  r.d_finetune = read_count(require(j, "d_finetune", line, "d_finetune"), line, "d_finetune");

  const auto& cps = require(j, "checkpoints", line, "checkpoints");
  if (!cps.is_array()) fail(line, "checkpoints", "must be an array");
  if (cps.empty()) fail(line, "checkpoints", "must be non-empty");
  r.checkpoints.reserve(cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const auto& c = cps[i];
    const std::string base = "checkpoints[" + std::to_string(i) + "]";
    if (!c.is_object()) fail(line, base, "must be an object");
    Checkpoint cp;
    cp.data_seen = read_number(require(c, "data_seen", line, base + ".data_seen"), line,
                               base + ".data_seen");
    if (cp.data_seen < 0.0) fail(line, base + ".data_seen", "must be non-negative");
    if (auto it = c.find("compute"); it != c.end() && !it->is_null()) {
      cp.compute = read_number(*it, line, base + ".compute");
      if (*cp.compute < 0.0) fail(line, base + ".compute", "must be non-negative");
    }
    const auto& loss = require(c, "eval_loss", line, base + ".eval_loss");
    if (loss.is_null()) {
      cp.eval_loss = std::nan("");
    } else {
      cp.eval_loss = read_number(loss, line, base + ".eval_loss");
    }
    r.checkpoints.push_back(cp);
  }
  return r;
}

ordered_json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

std::string_view to_string(Curriculum c) {
  return c == Curriculum::kFromScratch ? "from_scratch" : "finetuned";
}

std::optional<Curriculum> parse_curriculum(std::string_view text) {
  if (text == "from_scratch") return Curriculum::kFromScratch;
  if (text == "finetuned") return Curriculum::kFinetuned;
  return std::nullopt;
}

std::optional<double> RunRecord::best_loss() const {
  std::optional<double> best;
  for (const auto& c : checkpoints) {
    if (!std::isfinite(c.eval_loss)) continue;
    if (!best || c.eval_loss < *best) best = c.eval_loss;
  }
  return best;
}

RunSet::RunSet(std::vector<RunRecord> runs, Provenance provenance)
    : runs_(std::move(runs)), provenance_(std::move(provenance)) {
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < runs_.size(); ++i) {
    auto [it, inserted] = seen.emplace(runs_[i].run_id, i);
    if (!inserted) {
      throw InvalidArgument("duplicate run_id '" + runs_[i].run_id + "' at positions " +
                            std::to_string(it->second) + " and " + std::to_string(i));
    }
  }
}

const RunRecord* RunSet::find(std::string_view run_id) const {
  for (const auto& r : runs_) {
    if (r.run_id == run_id) return &r;
  }
  return nullptr;
}

bool RunSet::has_from_scratch() const {
  return std::any_of(runs_.begin(), runs_.end(),
                     [](const RunRecord& r) { return r.curriculum == Curriculum::kFromScratch; });
}

RunSet RunSet::merge(const RunSet& a, const RunSet& b) {
  std::vector<RunRecord> runs = a.runs_;
  runs.insert(runs.end(), b.runs_.begin(), b.runs_.end());
  Provenance p = a.provenance_;
  p.sources.insert(p.sources.end(), b.provenance_.sources.begin(), b.provenance_.sources.end());
  if (p.ingested_at.empty()) p.ingested_at = b.provenance_.ingested_at;
  return RunSet(std::move(runs), std::move(p));
}

RunSet ingest_runs(std::istream& in, const std::string& source_name) {
  std::vector<RunRecord> runs;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    RunRecord r = parse_record(text, line);
    auto [it, inserted] = first_line.emplace(r.run_id, line);
    if (!inserted) {
      throw InvalidArgument("duplicate run_id '" + r.run_id + "' on lines " +
                            std::to_string(it->second) + " and " + std::to_string(line));
    }
    runs.push_back(std::move(r));
  }
  return RunSet(std::move(runs), Provenance{{source_name}, utc_timestamp()});
}

RunSet ingest_runs_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read runs file '" + path.string() + "'");
  return ingest_runs(in, path.string());
}

std::string to_jsonl_line(const RunRecord& run) {
  ordered_json j;
  j["run_id"] = run.run_id;
  j["curriculum"] = std::string(to_string(run.curriculum));
  j["pretrain_label"] = run.pretrain_label;
  j["n_params"] = run.n_params;
  j["d_finetune"] = run.d_finetune;
  auto cps = ordered_json::array();
  for (const auto& c : run.checkpoints) {
    ordered_json cj;
    cj["data_seen"] = c.data_seen;
    cj["compute"] = c.compute ? number_or_null(*c.compute) : ordered_json(nullptr);
    cj["eval_loss"] = number_or_null(c.eval_loss);
    cps.push_back(std::move(cj));
  }
  j["checkpoints"] = std::move(cps);
  return j.dump();
}

void export_runs(const RunSet& rs, std::ostream& out) {
  for (const auto& r : rs.runs()) out << to_jsonl_line(r) << '\n';
}

std::string export_runs(const RunSet& rs) {
  std::ostringstream os;
  export_runs(rs, os);
  return os.str();
}

// ---------------------------------------------------------------------------

std::string_view to_string(FindingKind k) {
  switch (k) {
    case FindingKind::kDataSeenNotIncreasing:
      return "data_seen_not_increasing";
    case FindingKind::kComputeDecreasing:
      return "compute_decreasing";
    case FindingKind::kComputeMissing:
      return "compute_missing";
    case FindingKind::kNonFiniteLoss:
      return "non_finite_loss";
    case FindingKind::kNonPositiveLoss:
      return "non_positive_loss";
    case FindingKind::kNotConverged:
      return "not_converged";
  }
  return "unknown";
}

bool ValidationReport::converged(std::string_view run_id) const {
  for (const auto& r : runs) {
    if (r.run_id == run_id) return r.converged;
  }
  return false;
}

bool run_converged(const RunRecord& run, double rel_tol, double* improvement) {
  const auto& cps = run.checkpoints;
  double best_all = std::numeric_limits<double>::infinity();
  double best_before = std::numeric_limits<double>::infinity();
  if (cps.empty()) {
    if (improvement) *improvement = 0.0;
    return false;
  }
  // The final quarter starts at index floor(0.75 * (n - 1)).
  const std::size_t start = (3 * (cps.size() - 1)) / 4;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const double l = cps[i].eval_loss;
    if (!std::isfinite(l)) continue;
    best_all = std::min(best_all, l);
    if (i <= start) best_before = std::min(best_before, l);
  }
  double rel = 0.0;
  if (std::isfinite(best_before) && std::isfinite(best_all) && best_before > 0.0) {
    rel = (best_before - best_all) / best_before;
  } else if (!std::isfinite(best_all)) {
    rel = std::numeric_limits<double>::infinity();
  } else {
    // Only the final quarter has finite losses; nothing to compare against.
    rel = std::numeric_limits<double>::infinity();
  }
  if (improvement) *improvement = rel;
  return rel < rel_tol;
}

ValidationReport validate_runs(const RunSet& rs, const ValidationOptions& options) {
  ValidationReport report;
  for (const auto& run : rs.runs()) {
    const auto& cps = run.checkpoints;
    for (std::size_t i = 0; i < cps.size(); ++i) {
      if (i > 0 && !(cps[i].data_seen > cps[i - 1].data_seen)) {
        report.findings.push_back({run.run_id, FindingKind::kDataSeenNotIncreasing, i,
                                   "data_seen does not increase at checkpoint " + std::to_string(i)});
      }
      if (i > 0 && cps[i].compute && cps[i - 1].compute && *cps[i].compute < *cps[i - 1].compute) {
        report.findings.push_back({run.run_id, FindingKind::kComputeDecreasing, i,
                                   "compute decreases at checkpoint " + std::to_string(i)});
      }
      if (!std::isfinite(cps[i].eval_loss)) {
        report.findings.push_back({run.run_id, FindingKind::kNonFiniteLoss, i,
                                   "non-finite eval_loss at checkpoint " + std::to_string(i)});
      } else if (cps[i].eval_loss <= 0.0) {
        report.findings.push_back({run.run_id, FindingKind::kNonPositiveLoss, i,
                                   "non-positive eval_loss at checkpoint " + std::to_string(i)});
      }
    }
    double improvement = 0.0;
    const bool ok = run_converged(run, options.convergence_rel_tol, &improvement);
    if (!ok) {
      std::ostringstream os;
      os << "best loss improved by " << improvement << " (relative) over the final quarter";
      report.findings.push_back({run.run_id, FindingKind::kNotConverged, cps.size() - 1, os.str()});
    }
    report.runs.push_back({run.run_id, ok, improvement});
  }
  return report;
}

// ---------------------------------------------------------------------------

std::string LossCurve::label() const {
  std::ostringstream os;
  os << to_string(curriculum);
  if (!pretrain_label.empty()) os << ':' << pretrain_label;
  os << " N=" << static_cast<double>(n_params);
  if (level == Level::kWithinRun) os << " D=" << static_cast<double>(d_finetune);
  return os.str();
}

void clean_curve(std::vector<CurvePoint>& points) {
  std::stable_sort(points.begin(), points.end(), [](const CurvePoint& a, const CurvePoint& b) {
    if (a.x != b.x) return a.x < b.x;
    return a.raw_loss < b.raw_loss;
  });
  std::vector<CurvePoint> merged;
  merged.reserve(points.size());
  for (auto& p : points) {
    if (!merged.empty() && merged.back().x == p.x) continue;  // lower loss already kept
    merged.push_back(std::move(p));
  }
  double best = std::numeric_limits<double>::infinity();
  for (auto& p : merged) {
    best = std::min(best, p.raw_loss);
    p.loss = best;
  }
  points = std::move(merged);
}

CurveSet build_curves(const RunSet& rs, Axis axis, Level level) {
  CurveSet out;
  if (level == Level::kWithinRun) {
    for (const auto& run : rs.runs()) {
      LossCurve c;
      c.curriculum = run.curriculum;
      c.pretrain_label = run.pretrain_label;
      c.n_params = run.n_params;
      c.axis = axis;
      c.level = level;
      c.run_id = run.run_id;
      c.d_finetune = run.d_finetune;
      c.members = {run.run_id};
      for (const auto& cp : run.checkpoints) {
        if (axis == Axis::kCompute && !cp.compute) {
          throw InvalidArgument("run '" + run.run_id + "' has a checkpoint without compute");
        }
        if (!std::isfinite(cp.eval_loss)) continue;
        c.points.push_back({axis == Axis::kData ? cp.data_seen : *cp.compute, cp.eval_loss,
                            cp.eval_loss, run.run_id});
      }
      if (c.points.empty()) {
        out.skipped.push_back("run '" + run.run_id + "': no finite losses");
        continue;
      }
      clean_curve(c.points);
      out.curves.push_back(std::move(c));
    }
    return out;
  }

  // Across runs: group by (curriculum, pretrain_label, n_params); x is
  // d_finetune for the data axis and the compute at the best checkpoint for
  // the compute axis.
  using Key = std::tuple<int, std::string, std::int64_t>;
  std::map<Key, LossCurve> groups;
  for (const auto& run : rs.runs()) {
    Key key{static_cast<int>(run.curriculum), run.pretrain_label, run.n_params};
    auto [it, inserted] = groups.try_emplace(key);
    LossCurve& c = it->second;
    if (inserted) {
      c.curriculum = run.curriculum;
      c.pretrain_label = run.pretrain_label;
      c.n_params = run.n_params;
      c.axis = axis;
      c.level = level;
    }
    c.members.push_back(run.run_id);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < run.checkpoints.size(); ++i) {
      const auto& cp = run.checkpoints[i];
      if (axis == Axis::kCompute && !cp.compute) {
        throw InvalidArgument("run '" + run.run_id + "' has a checkpoint without compute");
      }
      if (!std::isfinite(cp.eval_loss)) continue;
      if (!best || cp.eval_loss < run.checkpoints[*best].eval_loss) best = i;
    }
    if (!best) {
      out.skipped.push_back("run '" + run.run_id + "': no finite losses");
      continue;
    }
    const auto& cp = run.checkpoints[*best];
    const double x = axis == Axis::kData ? static_cast<double>(run.d_finetune) : *cp.compute;
    c.points.push_back({x, cp.eval_loss, cp.eval_loss, run.run_id});
  }
  for (auto& [key, c] : groups) {
    if (c.points.empty()) {
      out.skipped.push_back("group '" + c.label() + "': empty");
      continue;
    }
    clean_curve(c.points);
    out.curves.push_back(std::move(c));
  }
  return out;
}

}  // namespace xferlaw
