// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "property.hpp"
#include "xferlaw/error.hpp"
#include "xferlaw/synth_oracle.hpp"

namespace xferlaw {
namespace {

using testing::rel_diff;

LossCurve compute_curve(const std::string& id, const std::vector<std::pair<double, double>>& xy) {
  LossCurve c;
  c.axis = Axis::kCompute;
  c.run_id = id;
  for (const auto& [x, y] : xy) c.points.push_back({x, y, y, id});
  clean_curve(c.points);
  return c;
}

// Every distinct (compute, loss) pair that no other distinct pair dominates
// (no worse on both axes).
std::set<std::pair<double, double>> brute_force_frontier(std::span<const LossCurve> curves) {
  std::vector<std::pair<double, double>> all;
  for (const auto& c : curves) {
    for (const auto& p : c.points) all.emplace_back(p.x, p.raw_loss);
  }
  std::set<std::pair<double, double>> out;
  for (const auto& p : all) {
    bool dominated = false;
    for (const auto& q : all) {
      if (q != p && q.first <= p.first && q.second <= p.second) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.insert(p);
  }
  return out;
}

std::set<std::pair<double, double>> as_set(const std::vector<FrontierPoint>& f) {
  std::set<std::pair<double, double>> out;
  for (const auto& p : f) out.insert({p.compute, p.loss});
  return out;
}

void expect_sorted_strict(const std::vector<FrontierPoint>& f) {
  for (std::size_t i = 1; i < f.size(); ++i) {
    EXPECT_GT(f[i].compute, f[i - 1].compute);
    EXPECT_LT(f[i].loss, f[i - 1].loss);
  }
}

std::vector<LossCurve> random_curves(testing::Gen& g, int curves, int points) {
  std::vector<LossCurve> out;
  for (int c = 0; c < curves; ++c) {
    std::vector<std::pair<double, double>> xy;
    double x = g.log_uniform(1e10, 1e12);
    double loss = g.uniform(3.0, 6.0);
    for (int i = 0; i < points; ++i) {
      x *= g.uniform(1.05, 2.0);
      loss = std::max(0.5, loss - g.uniform(-0.05, 0.3));
      // Occasional integer-valued compute creates exact ties across curves.
      xy.emplace_back(g.integer(0, 4) == 0 ? std::round(x / 1e10) * 1e10 : x, loss);
    }
    out.push_back(compute_curve("c" + std::to_string(c), xy));
  }
  return out;
}

TEST(ParetoFrontier, SingleCurveIsRunningMinimumEnvelope) {
  const auto c = compute_curve("a", {{1, 5.0}, {2, 4.0}, {3, 4.5}, {4, 3.0}, {5, 3.0}, {6, 3.2}, {7, 2.0}});
  const auto f = pareto_frontier(std::vector<LossCurve>{c});
  const std::vector<std::pair<double, double>> want{{1, 5.0}, {2, 4.0}, {4, 3.0}, {7, 2.0}};
  ASSERT_EQ(f.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(f[i].compute, want[i].first);
    EXPECT_EQ(f[i].loss, want[i].second);
    EXPECT_EQ(f[i].run_id, "a");
  }
}

TEST(ParetoFrontier, DominantCurveOwnsFrontier) {
  const std::vector<LossCurve> curves{compute_curve("weak", {{1, 5.0}, {2, 4.5}, {4, 4.0}, {8, 3.5}}),
                                      compute_curve("strong", {{1, 4.0}, {2, 3.5}, {4, 3.0}, {8, 2.5}})};
  for (const auto& p : pareto_frontier(curves)) EXPECT_EQ(p.run_id, "strong");
}

TEST(ParetoFrontier, FiveCurvesMatchBruteForce) {
  testing::for_all(20, 83, [](testing::Gen& g) {
    const auto curves = random_curves(g, 5, 20);
    const auto f = pareto_frontier(curves);
    expect_sorted_strict(f);
    EXPECT_EQ(as_set(f), brute_force_frontier(curves));
  });
}

TEST(ParetoFrontier, ThousandRandomPointsMatchBruteForce) {
  testing::for_all(5, 89, [](testing::Gen& g) {
    std::vector<LossCurve> curves;
    for (int c = 0; c < 10; ++c) {
      std::vector<std::pair<double, double>> xy;
      for (int i = 0; i < 100; ++i) xy.emplace_back(g.log_uniform(1e10, 1e20), g.uniform(1.0, 5.0));
      curves.push_back(compute_curve("r" + std::to_string(c), xy));
    }
    const auto f = pareto_frontier(curves);
    expect_sorted_strict(f);
    EXPECT_EQ(as_set(f), brute_force_frontier(curves));
  });
}

TEST(ParetoFrontier, NoFrontierPointIsDominated) {
  testing::for_all(20, 97, [](testing::Gen& g) {
    const auto curves = random_curves(g, 4, 30);
    for (const auto& p : pareto_frontier(curves)) {
      for (const auto& c : curves) {
        for (const auto& q : c.points) EXPECT_FALSE(q.x <= p.compute && q.raw_loss < p.loss);
      }
    }
  });
}

TEST(ParetoFrontier, InvariantToOrderAndDuplication) {
  testing::for_all(20, 101, [](testing::Gen& g) {
    auto curves = random_curves(g, 5, 15);
    const auto ref = pareto_frontier(curves);
    std::shuffle(curves.begin(), curves.end(), g.engine());
    EXPECT_EQ(pareto_frontier(curves), ref);
    curves.push_back(curves[static_cast<std::size_t>(g.integer(0, 4))]);
    EXPECT_EQ(pareto_frontier(curves), ref);
  });
}

TEST(ParetoFrontier, NeedsComputeCurves) {
  LossCurve data_axis = compute_curve("d", {{1, 2.0}});
  data_axis.axis = Axis::kData;
  EXPECT_THROW(pareto_frontier(std::vector<LossCurve>{data_axis}), InvalidArgument);
  EXPECT_THROW(pareto_frontier(std::vector<LossCurve>{}), InvalidArgument);
}

TEST(ParetoFrontier, BuildsFromRunSetCurves) {
  GroundTruth gt;
  gt.curves.enabled = true;
  const auto curves = build_curves(generate_fromscratch(gt), Axis::kCompute, Level::kWithinRun).curves;
  const auto f = pareto_frontier(curves);
  expect_sorted_strict(f);
  EXPECT_EQ(as_set(f), brute_force_frontier(curves));
}

// ---------------------------------------------------------------------------

TEST(ConvergedCompute, FlatTailAfterStepTen) {
  std::vector<std::pair<double, double>> xy;
  for (int i = 0; i < 20; ++i) xy.emplace_back(100.0 * (i + 1), i < 10 ? 5.0 - 0.3 * i : 5.0 - 0.3 * 10);
  const auto r = converged_compute(compute_curve("a", xy), 1e-3);
  EXPECT_EQ(r.index, 10u);
  EXPECT_EQ(r.compute, 1100.0);
  EXPECT_TRUE(r.converged);
}

TEST(ConvergedCompute, SteepCurveNotConverged) {
  std::vector<std::pair<double, double>> xy;
  for (int i = 0; i < 20; ++i) xy.emplace_back(std::pow(2.0, i), 10.0 * std::pow(0.7, i));
  const auto r = converged_compute(compute_curve("a", xy));
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.index, 19u);
}

TEST(ConvergedCompute, AnalyticPlateau) {
  std::vector<std::pair<double, double>> xy;
  for (int i = 0; i <= 60; ++i) {
    const double c = std::pow(10.0, 10.0 + i * 0.1);
    xy.emplace_back(c, 2.0 * (1.0 + std::exp(-c / 1e13)));
  }
  const double tol = 1e-3;
  const auto r = converged_compute(compute_curve("a", xy), tol);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(rel_diff(r.loss, 2.0), tol);
}

TEST(ConvergedCompute, SyntheticRunPlateauAtPlantedLoss) {
  GroundTruth gt;
  gt.curves.enabled = true;
  gt.n_grid = {1'000'000};
  const auto rs = generate_fromscratch(gt);
  const auto curves = build_curves(rs, Axis::kCompute, Level::kWithinRun).curves;
  for (const auto& c : curves) {
    const double planted = gt.scaling.loss(static_cast<double>(c.n_params), static_cast<double>(c.d_finetune));
    const auto r = converged_compute(c, 1e-3);
    EXPECT_TRUE(r.converged) << c.run_id;
    EXPECT_LT(rel_diff(r.loss, planted), 1e-3) << c.run_id;
  }
}

TEST(ConvergedCompute, MonotoneInTolerance) {
  testing::for_all(30, 103, [](testing::Gen& g) {
    const auto c = random_curves(g, 1, 40).front();
    double prev = INFINITY;
    for (double tol : {1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 0.5}) {
      const double at = converged_compute(c, tol).compute;
      EXPECT_LE(at, prev);
      prev = at;
    }
  });
}

TEST(ConvergedCompute, EmptyCurveFails) {
  EXPECT_THROW(converged_compute(LossCurve{}), InvalidArgument);
}

// ---------------------------------------------------------------------------

RunRecord epoch_run(std::string id, Curriculum cur, std::int64_t d, std::vector<std::pair<double, double>> seen_loss) {
  RunRecord r;
  r.run_id = std::move(id);
  r.curriculum = cur;
  r.n_params = 1000;
  r.d_finetune = d;
  for (const auto& [s, l] : seen_loss) r.checkpoints.push_back({s, std::nullopt, l});
  return r;
}

DNFit flat_dn(double d) {
  DNFit dn;
  dn.coefficient = d;
  dn.exponent = 1e-300;
  return dn;
}

TEST(BestEpoch, ArithmeticAndTruncation) {
  const RunSet rs({epoch_run("a", Curriculum::kFromScratch, 100, {{100, 3.0}, {300, 2.0}, {500, 2.5}}),
                   epoch_run("b", Curriculum::kFromScratch, 100, {{100, 3.0}, {300, 2.5}, {800, 2.0}})});
  const auto rep = best_epoch_summary(rs, flat_dn(1e4));
  ASSERT_EQ(rep.runs.size(), 2u);
  EXPECT_EQ(rep.runs[0].epochs_at_best, 3.0);
  EXPECT_FALSE(rep.runs[0].possibly_truncated);
  EXPECT_EQ(rep.runs[1].epochs_at_best, 8.0);
  EXPECT_TRUE(rep.runs[1].possibly_truncated);
  EXPECT_EQ(rep.runs[0].bucket, -2);
  ASSERT_EQ(rep.buckets.size(), 1u);
  EXPECT_EQ(rep.buckets[0].mean_epochs, 5.5);
}

TEST(BestEpoch, PlantedThreeFoldRatio) {
  GroundTruth gt;
  gt.curves.enabled = true;
  const auto rs = generate_all(gt);
  std::vector<LossCurve> scratch;
  for (auto& c : build_curves(rs, Axis::kData, Level::kAcrossRuns).curves) {
    if (c.curriculum == Curriculum::kFromScratch) scratch.push_back(std::move(c));
  }
  const auto rep = best_epoch_summary(rs, estimate_dn(scratch));
  for (const auto& r : rep.runs) {
    EXPECT_NEAR(r.epochs_at_best, r.curriculum == Curriculum::kFromScratch ? 3.0 : 1.0, 1e-12) << r.run_id;
    EXPECT_FALSE(r.possibly_truncated);
  }
  ASSERT_FALSE(rep.comparisons.empty());
  for (const auto& c : rep.comparisons) EXPECT_NEAR(c.ratio, 3.0, 1e-12);
  const nlohmann::json j = rep;
  EXPECT_EQ(j["comparisons"].size(), rep.comparisons.size());
}

}  // namespace
}  // namespace xferlaw
