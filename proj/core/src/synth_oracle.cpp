// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/synth_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "xferlaw/error.hpp"

namespace xferlaw {

ScalingLawParams default_synthetic_scaling() {
  return ScalingLawParams{7e9, 0.24, 1e11, 0.3};
}

void GroundTruth::validate() const {
  scaling.validate();
  if (!(transfer.k >= 0.0) || !std::isfinite(transfer.k)) throw InvalidArgument("ground-truth k must be >= 0");
  if (n_grid.empty() || d_grid.empty()) throw InvalidArgument("ground-truth grids must be non-empty");
  for (auto n : n_grid) {
    if (n < 1) throw InvalidArgument("n_grid entries must be positive");
  }
  for (auto d : d_grid) {
    if (d < 1) throw InvalidArgument("d_grid entries must be positive");
  }
  for (auto d : baseline.explicit_grid) {
    if (d < 1) throw InvalidArgument("baseline grid entries must be positive");
  }
  if (baseline.explicit_grid.empty() &&
      (baseline.per_decade < 1 || !(baseline.hi_decades > baseline.lo_decades))) {
    throw InvalidArgument("relative baseline grid needs per_decade >= 1 and hi_decades > lo_decades");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidArgument("noise_sigma must be >= 0");
  if (!(ossify_factor > 0.0 && ossify_factor < 1.0)) throw InvalidArgument("ossify_factor must lie in (0, 1)");
  for (const auto& [n, d] : ossified_cells) {
    if (std::find(n_grid.begin(), n_grid.end(), n) == n_grid.end() ||
        std::find(d_grid.begin(), d_grid.end(), d) == d_grid.end()) {
      throw InvalidArgument("ossified cell (" + std::to_string(n) + ", " + std::to_string(d) +
                            ") is not on the grid");
    }
  }
  if (curves.enabled) {
    if (!(curves.amplitude > 0.0 && curves.shape > 0.0 && curves.best_epoch_from_scratch > 0.0 &&
          curves.best_epoch_finetuned > 0.0) ||
        curves.points_per_octave < 1 || curves.octaves_before < 0 || curves.octaves_after < 1) {
      throw InvalidArgument("invalid training-curve options");
    }
  }
}

void to_json(nlohmann::json& j, const GroundTruth& gt) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [n, d] : gt.ossified_cells) cells.push_back({n, d});
  j = nlohmann::json{{"scaling", gt.scaling},
                     {"transfer", {{"k", gt.transfer.k}, {"alpha", gt.transfer.alpha}, {"beta", gt.transfer.beta}}},
                     {"n_grid", gt.n_grid},
                     {"d_grid", gt.d_grid},
                     {"baseline",
                      {{"explicit_grid", gt.baseline.explicit_grid},
                       {"lo_decades", gt.baseline.lo_decades},
                       {"hi_decades", gt.baseline.hi_decades},
                       {"per_decade", gt.baseline.per_decade}}},
                     {"noise_sigma", gt.noise_sigma},
                     {"seed", gt.seed},
                     {"pretrain_label", gt.pretrain_label},
                     {"ossified_cells", cells},
                     {"ossify_factor", gt.ossify_factor},
                     {"curves",
                      {{"enabled", gt.curves.enabled},
                       {"amplitude", gt.curves.amplitude},
                       {"shape", gt.curves.shape},
                       {"best_epoch_from_scratch", gt.curves.best_epoch_from_scratch},
                       {"best_epoch_finetuned", gt.curves.best_epoch_finetuned},
                       {"octaves_before", gt.curves.octaves_before},
                       {"octaves_after", gt.curves.octaves_after},
                       {"points_per_octave", gt.curves.points_per_octave}}}};
}

void from_json(const nlohmann::json& j, GroundTruth& gt) {
  gt = GroundTruth{};
  if (auto it = j.find("scaling"); it != j.end()) gt.scaling = it->get<ScalingLawParams>();
  if (auto it = j.find("transfer"); it != j.end()) {
    gt.transfer.k = it->at("k").get<double>();
    gt.transfer.alpha = it->at("alpha").get<double>();
    gt.transfer.beta = it->at("beta").get<double>();
  }
  gt.n_grid = j.value("n_grid", gt.n_grid);
  gt.d_grid = j.value("d_grid", gt.d_grid);
  if (auto it = j.find("baseline"); it != j.end()) {
    gt.baseline.explicit_grid = it->value("explicit_grid", gt.baseline.explicit_grid);
    gt.baseline.lo_decades = it->value("lo_decades", gt.baseline.lo_decades);
    gt.baseline.hi_decades = it->value("hi_decades", gt.baseline.hi_decades);
    gt.baseline.per_decade = it->value("per_decade", gt.baseline.per_decade);
  }
  gt.noise_sigma = j.value("noise_sigma", gt.noise_sigma);
  gt.seed = j.value("seed", gt.seed);
  gt.pretrain_label = j.value("pretrain_label", gt.pretrain_label);
  if (auto it = j.find("ossified_cells"); it != j.end()) {
    for (const auto& c : *it) gt.ossified_cells.emplace_back(c.at(0).get<std::int64_t>(), c.at(1).get<std::int64_t>());
  }
  gt.ossify_factor = j.value("ossify_factor", gt.ossify_factor);
  if (auto it = j.find("curves"); it != j.end()) {
    auto& c = gt.curves;
    c.enabled = it->value("enabled", c.enabled);
    c.amplitude = it->value("amplitude", c.amplitude);
    c.shape = it->value("shape", c.shape);
    c.best_epoch_from_scratch = it->value("best_epoch_from_scratch", c.best_epoch_from_scratch);
    c.best_epoch_finetuned = it->value("best_epoch_finetuned", c.best_epoch_finetuned);
    c.octaves_before = it->value("octaves_before", c.octaves_before);
    c.octaves_after = it->value("octaves_after", c.octaves_after);
    c.points_per_octave = it->value("points_per_octave", c.points_per_octave);
  }
}

double true_dn(const ScalingLawParams& s, double n_params, double threshold) {
  // [A + d_c / D]^alpha_d = A^alpha_d / threshold with A = (n_c / N)^(alpha_n / alpha_d).
  const double a = std::pow(s.n_c / n_params, s.alpha_n / s.alpha_d);
  return s.d_c / (a * (std::pow(threshold, -1.0 / s.alpha_d) - 1.0));
}

std::vector<std::int64_t> baseline_grid(const GroundTruth& gt, std::int64_t n_params) {
  if (!gt.baseline.explicit_grid.empty()) {
    std::set<std::int64_t> uniq(gt.baseline.explicit_grid.begin(), gt.baseline.explicit_grid.end());
    return {uniq.begin(), uniq.end()};
  }
  const double dn = true_dn(gt.scaling, static_cast<double>(n_params));
  const auto steps =
      static_cast<int>(std::lround((gt.baseline.hi_decades - gt.baseline.lo_decades) * gt.baseline.per_decade));
  std::set<std::int64_t> uniq;
  for (int i = 0; i <= steps; ++i) {
    const double e = gt.baseline.lo_decades + static_cast<double>(i) / gt.baseline.per_decade;
    uniq.insert(std::max<std::int64_t>(1, std::llround(dn * std::pow(10.0, e))));
  }
  return {uniq.begin(), uniq.end()};
}

double noise_factor(const GroundTruth& gt, std::int64_t n_params, double data) {
  if (gt.noise_sigma == 0.0) return 1.0;
  const auto n = static_cast<std::uint64_t>(n_params);
  const auto d = std::bit_cast<std::uint64_t>(data);
  std::seed_seq seq{static_cast<std::uint32_t>(gt.seed), static_cast<std::uint32_t>(gt.seed >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32),
                    static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, gt.noise_sigma);
  return std::exp(normal(rng));
}

namespace {

std::vector<Checkpoint> checkpoints_for(const GroundTruth& gt, std::int64_t n_params, std::int64_t d,
                                        double converged_loss, double best_epoch) {
  const double dd = static_cast<double>(d);
  const double n = static_cast<double>(n_params);
  if (!gt.curves.enabled) {
    const double seen = best_epoch * dd;
    return {Checkpoint{seen, 6.0 * n * seen, converged_loss}};
  }
  const auto& c = gt.curves;
  std::vector<Checkpoint> out;
  for (int j = -c.octaves_before * c.points_per_octave; j <= c.octaves_after * c.points_per_octave; ++j) {
    const double rel = std::exp2(static_cast<double>(j) / c.points_per_octave);
    const double shape_term = std::pow(rel, -c.shape) + c.shape * rel - 1.0 - c.shape;
    const double loss = j == 0 ? converged_loss : converged_loss * (1.0 + c.amplitude * shape_term);
    const double seen = best_epoch * rel * dd;
    out.push_back({seen, 6.0 * n * seen, loss});
  }
  return out;
}

}  // namespace

RunSet generate_fromscratch(const GroundTruth& gt) {
  gt.validate();
  std::vector<RunRecord> runs;
  for (auto n : gt.n_grid) {
    for (auto d : baseline_grid(gt, n)) {
      const double dd = static_cast<double>(d);
      const double loss = gt.scaling.loss(static_cast<double>(n), dd) * noise_factor(gt, n, dd);
      RunRecord r;
      r.run_id = "scratch-n" + std::to_string(n) + "-d" + std::to_string(d);
      r.curriculum = Curriculum::kFromScratch;
      r.n_params = n;
      r.d_finetune = d;
      r.checkpoints = checkpoints_for(gt, n, d, loss, gt.curves.best_epoch_from_scratch);
      runs.push_back(std::move(r));
    }
  }
  return RunSet(std::move(runs), Provenance{{"synthetic seed=" + std::to_string(gt.seed)}, ""});
}

RunSet generate_finetuned(const GroundTruth& gt) {
  gt.validate();
  std::set<std::pair<std::int64_t, std::int64_t>> ossified(gt.ossified_cells.begin(), gt.ossified_cells.end());
  std::vector<RunRecord> runs;
  for (auto n : gt.n_grid) {
    for (auto d : gt.d_grid) {
      const double nn = static_cast<double>(n);
      const double df = static_cast<double>(d);
      const double d_effective = ossified.contains({n, d})
                                     ? gt.ossify_factor * df
                                     : df + gt.transfer.k * std::pow(df, gt.transfer.alpha) * std::pow(nn, gt.transfer.beta);
      const double loss = gt.scaling.loss(nn, d_effective) * noise_factor(gt, n, df);
      RunRecord r;
      r.run_id = "ft-" + gt.pretrain_label + "-n" + std::to_string(n) + "-d" + std::to_string(d);
      r.curriculum = Curriculum::kFinetuned;
      r.pretrain_label = gt.pretrain_label;
      r.n_params = n;
      r.d_finetune = d;
      r.checkpoints = checkpoints_for(gt, n, d, loss, gt.curves.best_epoch_finetuned);
      runs.push_back(std::move(r));
    }
  }
  return RunSet(std::move(runs), Provenance{{"synthetic seed=" + std::to_string(gt.seed)}, ""});
}

RunSet generate_all(const GroundTruth& gt) {
  return RunSet::merge(generate_fromscratch(gt), generate_finetuned(gt));
}

RoundtripReport roundtrip_check(const GroundTruth& gt, const TransferCoefficients& recovered,
                                const RoundtripTolerances& tol) {
  auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
  RoundtripReport r;
  r.k_rel_error = rel(recovered.k, gt.transfer.k);
  r.alpha_rel_error = rel(recovered.alpha, gt.transfer.alpha);
  r.beta_rel_error = rel(recovered.beta, gt.transfer.beta);
  r.k_pass = r.k_rel_error <= tol.k;
  r.alpha_pass = r.alpha_rel_error <= tol.alpha;
  r.beta_pass = r.beta_rel_error <= tol.beta;
  return r;
}

void to_json(nlohmann::json& j, const RoundtripReport& r) {
  j = nlohmann::json{{"k_rel_error", r.k_rel_error},
                     {"alpha_rel_error", r.alpha_rel_error},
                     {"beta_rel_error", r.beta_rel_error},
                     {"k_pass", r.k_pass},
                     {"alpha_pass", r.alpha_pass},
                     {"beta_pass", r.beta_pass},
                     {"pass", r.pass()}};
}

}  // namespace xferlaw
