// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "xferlaw/transfer_law.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "property.hpp"
#include "xferlaw/error.hpp"
#include "xferlaw/pipeline.hpp"
#include "xferlaw/synth_oracle.hpp"

namespace xferlaw {
namespace {

using testing::rel_diff;

// Rows whose fractions come straight from the law, no baseline inversion.
std::vector<EffectiveDataRow> in_family_rows(const TransferCoefficients& c, const std::vector<std::int64_t>& ns,
                                             const std::vector<std::int64_t>& dfs) {
  std::vector<EffectiveDataRow> rows;
  for (auto d : dfs) {
    for (auto n : ns) {
      EffectiveDataRow r;
      r.run_id = "n" + std::to_string(n) + "-d" + std::to_string(d);
      r.n_params = n;
      r.d_finetune = d;
      r.d_transferred = evaluate_transfer(c, static_cast<double>(n), static_cast<double>(d));
      r.d_effective = static_cast<double>(d) + r.d_transferred;
      r.fraction = fraction_from_transfer(r.d_transferred, static_cast<double>(d));
      rows.push_back(r);
    }
  }
  return rows;
}

const std::vector<std::int64_t> kNs{100'000, 1'000'000, 10'000'000, 100'000'000, 1'000'000'000};
const std::vector<std::int64_t> kDfs{100'000, 1'000'000, 10'000'000, 100'000'000};

TEST(EvaluateTransfer, ZeroShotTextToCode) {
  const double d_t = evaluate_transfer(text_preset(), 1.75e11, kZeroShotFinetune);
  EXPECT_LT(rel_diff(d_t, 3.7e8), 0.10) << d_t;
  // Frozen value: 1.9e4 * 1.75e11^0.38.
  EXPECT_LT(rel_diff(d_t, 3.5572e8), 1e-4) << d_t;
}

TEST(EvaluateTransfer, DegenerateCoefficients) {
  TransferCoefficients c;
  c.k = 1.0;
  c.alpha = 0.0;
  c.beta = 0.0;
  EXPECT_EQ(evaluate_transfer(c, 123.0, 4567.0), 1.0);
}

TEST(EvaluateTransfer, MidSizeTextModel) {
  EXPECT_LT(rel_diff(evaluate_transfer(text_preset(), 4e7, 3e5), 1.42e8), 0.005);
}

TEST(EvaluateTransfer, PreconditionsEnforced) {
  EXPECT_THROW(evaluate_transfer(text_preset(), 0.5, 10.0), InvalidArgument);
  EXPECT_THROW(evaluate_transfer(text_preset(), 10.0, 0.0), InvalidArgument);
}

TEST(EffectiveMultiplier, FewShotRatios) {
  const auto text = text_preset();
  const double text_ratio = evaluate_transfer(text, 1.75e11, 300.0) / evaluate_transfer(text, 1.75e11, 1.0);
  EXPECT_LT(rel_diff(text_ratio, std::pow(300.0, 0.18)), 1e-12);
  EXPECT_LT(rel_diff(text_ratio, 2.79), 0.005);
  EXPECT_LT(rel_diff(text_ratio, 2.8), 0.05);

  const auto mix = mixture_preset();
  const double mix_ratio = evaluate_transfer(mix, 1.75e11, 300.0) / evaluate_transfer(mix, 1.75e11, 1.0);
  EXPECT_LT(rel_diff(mix_ratio, 1.73), 0.005);
  EXPECT_LT(rel_diff(mix_ratio, 1.7), 0.05);
}

TEST(EffectiveMultiplier, NoTransferGivesOne) {
  TransferCoefficients c = text_preset();
  c.k = 0.0;
  EXPECT_EQ(effective_multiplier(c, 1e8, 1e6).exact, 1.0);
}

TEST(EffectiveMultiplier, ExactAndApproximateForms) {
  const auto m = effective_multiplier(text_preset(), 4e7, 3e5);
  EXPECT_LT(rel_diff(m.exact, 1.0 + m.approximate), 1e-12);
}

TEST(TransferLawProperties, Homogeneity) {
  testing::for_all(50, 3, [](testing::Gen& g) {
    TransferCoefficients c;
    c.k = g.log_uniform(1.0, 1e6);
    c.alpha = g.uniform(0.0, 0.99);
    c.beta = g.uniform(0.01, 0.99);
    const double n = g.log_uniform(1e3, 1e10);
    const double d = g.log_uniform(1.0, 1e8);
    const double s = g.log_uniform(1.0, 1e3);
    const double base = evaluate_transfer(c, n, d);
    EXPECT_LT(rel_diff(evaluate_transfer(c, n, d * s), base * std::pow(s, c.alpha)), 1e-12);
    EXPECT_LT(rel_diff(evaluate_transfer(c, n * s, d), base * std::pow(s, c.beta)), 1e-12);
  });
}

TEST(TransferLawProperties, StrictlyIncreasing) {
  testing::for_all(50, 5, [](testing::Gen& g) {
    TransferCoefficients c;
    c.k = g.log_uniform(1.0, 1e6);
    c.alpha = g.uniform(0.01, 0.99);
    c.beta = g.uniform(0.01, 0.99);
    const double n = g.log_uniform(1e3, 1e10);
    const double d = g.log_uniform(1.0, 1e8);
    const double s = g.uniform(1.01, 10.0);
    EXPECT_GT(evaluate_transfer(c, n * s, d), evaluate_transfer(c, n, d));
    EXPECT_GT(evaluate_transfer(c, n, d * s), evaluate_transfer(c, n, d));
  });
}

// ---------------------------------------------------------------------------

TEST(FitOfFits, InFamilyTableRecoversExactly) {
  const auto truth = text_preset();
  const auto c = fit_transfer_fit_of_fits(in_family_rows(truth, kNs, kDfs));
  EXPECT_NEAR(c.beta, 0.38, 1e-10);
  EXPECT_NEAR(c.alpha, 0.18, 1e-10);
  EXPECT_LT(rel_diff(c.k, 1.9e4), 1e-8);
  ASSERT_EQ(c.per_df_nstar.size(), kDfs.size());
  for (const auto& [d, nstar] : c.per_df_nstar) {
    const double want = std::pow(std::pow(d, 1.0 - truth.alpha) / truth.k, 1.0 / truth.beta);
    EXPECT_LT(rel_diff(nstar, want), 1e-8);
  }
}

TEST(FitOfFits, CommonBetaIsHonoured) {
  const auto c = fit_transfer_fit_of_fits(in_family_rows(text_preset(), kNs, kDfs), {.common_beta = 0.38});
  EXPECT_EQ(c.beta, 0.38);
}

TEST(FitOfFits, NoiselessSyntheticPipelineWithin2Percent) {
  const auto res = run_pipeline(generate_all(GroundTruth{}));
  EXPECT_LT(rel_diff(res.coefficients.k, 1.9e4), 0.02) << res.coefficients.k;
  EXPECT_LT(rel_diff(res.coefficients.alpha, 0.18), 0.02) << res.coefficients.alpha;
  EXPECT_LT(rel_diff(res.coefficients.beta, 0.38), 0.02) << res.coefficients.beta;
  ASSERT_TRUE(res.direct.has_value());
  EXPECT_LT(rel_diff(res.direct->k, res.coefficients.k), 0.10);
  EXPECT_LT(rel_diff(res.direct->alpha, res.coefficients.alpha), 0.10);
  EXPECT_LT(rel_diff(res.direct->beta, res.coefficients.beta), 0.10);
}

TEST(FitOfFits, NoisySyntheticAggregateWithin15Percent) {
  double log_k = 0.0, alpha = 0.0, beta = 0.0;
  constexpr int kSeeds = 20;
  for (int seed = 0; seed < kSeeds; ++seed) {
    GroundTruth gt;
    gt.noise_sigma = 0.02;
    gt.seed = static_cast<std::uint64_t>(seed);
    PipelineOptions opts;
    opts.fit_surface = false;
    const auto c = run_pipeline(generate_all(gt), opts).coefficients;
    log_k += std::log(c.k);
    alpha += c.alpha;
    beta += c.beta;
  }
  EXPECT_LT(rel_diff(std::exp(log_k / kSeeds), 1.9e4), 0.15);
  EXPECT_LT(rel_diff(alpha / kSeeds, 0.18), 0.15);
  EXPECT_LT(rel_diff(beta / kSeeds, 0.38), 0.15);
}

TEST(FitOfFits, SparseGroupIsNamed) {
  auto rows = in_family_rows(text_preset(), kNs, kDfs);
  rows.push_back(in_family_rows(text_preset(), {1'000'000}, {7'000'000}).front());
  try {
    fit_transfer_fit_of_fits(rows);
    FAIL();
  } catch (const FitError& e) {
    EXPECT_NE(std::string(e.what()).find("D_F=7000000"), std::string::npos) << e.what();
  }
}

TEST(FitOfFits, SingleGroupFails) {
  EXPECT_THROW(fit_transfer_fit_of_fits(in_family_rows(text_preset(), kNs, {1'000'000})), FitError);
}

TEST(FitOfFits, UnusableRowsAreIgnored) {
  auto rows = in_family_rows(text_preset(), kNs, kDfs);
  EffectiveDataRow bad = rows.front();
  bad.d_transferred = -5.0;
  bad.fraction = fraction_from_transfer(-5.0, static_cast<double>(bad.d_finetune));
  rows.push_back(bad);
  const auto c = fit_transfer_fit_of_fits(rows);
  EXPECT_NEAR(c.beta, 0.38, 1e-10);
}

TEST(FitOfFits, ExponentSpreadWarns) {
  TransferCoefficients flat = text_preset();
  flat.beta = 0.2;
  TransferCoefficients steep = text_preset();
  steep.beta = 0.5;
  auto rows = in_family_rows(flat, kNs, {1'000'000});
  for (const auto& r : in_family_rows(steep, kNs, {10'000'000})) rows.push_back(r);
  const auto c = fit_transfer_fit_of_fits(rows);
  bool warned = false;
  for (const auto& [stage, fit] : c.diagnostics) {
    if (stage == "stage2 shared exponent") warned = !fit.warnings.empty();
  }
  EXPECT_TRUE(warned);
  EXPECT_NEAR(c.beta, 0.35, 1e-10);
}

TEST(FitOfFits, RowOrderInvariant) {
  GroundTruth gt;
  gt.noise_sigma = 0.02;
  gt.seed = 7;
  PipelineOptions opts;
  opts.fit_surface = false;
  auto rows = run_pipeline(generate_all(gt), opts).fit_rows;
  const auto ref = fit_transfer_fit_of_fits(rows);
  const auto ref_direct = fit_transfer_direct(rows);
  testing::for_all(10, 11, [&](testing::Gen& g) {
    std::shuffle(rows.begin(), rows.end(), g.engine());
    const auto c = fit_transfer_fit_of_fits(rows);
    EXPECT_EQ(c.k, ref.k);
    EXPECT_EQ(c.alpha, ref.alpha);
    EXPECT_EQ(c.beta, ref.beta);
    const auto d = fit_transfer_direct(rows);
    EXPECT_EQ(d.k, ref_direct.k);
    EXPECT_EQ(d.alpha, ref_direct.alpha);
    EXPECT_EQ(d.beta, ref_direct.beta);
  });
}

// ---------------------------------------------------------------------------

TEST(DirectFit, InFamilyExact) {
  const auto c = fit_transfer_direct(in_family_rows(text_preset(), kNs, kDfs));
  EXPECT_NEAR(c.alpha, 0.18, 1e-10);
  EXPECT_NEAR(c.beta, 0.38, 1e-10);
  EXPECT_LT(rel_diff(c.k, 1.9e4), 1e-9);
}

TEST(DirectFit, SingleFinetuneSizeIsRankDeficient) {
  EXPECT_THROW(fit_transfer_direct(in_family_rows(text_preset(), kNs, {1'000'000})), FitError);
}

TEST(DirectFit, TooFewRows) {
  EXPECT_THROW(fit_transfer_direct(in_family_rows(text_preset(), {1000, 2000}, {10})), FitError);
}

// ---------------------------------------------------------------------------

TEST(TransferCoefficients, PresetsAndValidation) {
  EXPECT_EQ(preset_by_name("text")->k, 1.9e4);
  EXPECT_EQ(preset_by_name("mixture")->alpha, 0.096);
  EXPECT_FALSE(preset_by_name("python").has_value());
  EXPECT_NO_THROW(text_preset().validate());
  TransferCoefficients bad = text_preset();
  bad.alpha = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = text_preset();
  bad.beta = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = text_preset();
  bad.k = -1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(TransferCoefficients, JsonRoundTrip) {
  const auto c = fit_transfer_fit_of_fits(in_family_rows(text_preset(), kNs, kDfs));
  const nlohmann::json j = c;
  for (const char* key : {"k", "alpha", "beta", "per_df_nstar", "diagnostics"}) EXPECT_TRUE(j.contains(key)) << key;
  const auto back = nlohmann::json::parse(j.dump()).get<TransferCoefficients>();
  EXPECT_EQ(back.k, c.k);
  EXPECT_EQ(back.alpha, c.alpha);
  EXPECT_EQ(back.beta, c.beta);
  EXPECT_EQ(back.per_df_nstar, c.per_df_nstar);
  EXPECT_EQ(back.diagnostics.size(), c.diagnostics.size());
}

}  // namespace
}  // namespace xferlaw
