#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ddep/experiment.hpp"

namespace {

using ddep::ExperimentSpec;

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.n_firms = 2;
  s.checkpoints = {100, 1000};
  s.n_draws = 6;
  s.workers = 1;
  return s;
}

TEST(SampleDraw, DeterministicAndInRange) {
  ExperimentSpec s;
  s.n_firms = 4;
  for (std::size_t d = 0; d < 200; ++d) {
    const auto a = ddep::sample_draw(s, d);
    const auto b = ddep::sample_draw(s, d);
    ASSERT_EQ(a.params.alpha, b.params.alpha);
    ASSERT_EQ(a.params.beta, b.params.beta);
    ASSERT_TRUE(a.initial == b.initial);
    for (std::size_t i = 0; i < 4; ++i) {
      ASSERT_GE(a.params.alpha[i], 3.0);
      ASSERT_LE(a.params.alpha[i], 4.0);
      ASSERT_GE(a.params.beta[i], 0.4);
      ASSERT_LE(a.params.beta[i], 0.5);
      ASSERT_GE(a.initial[i], 0.0);
      ASSERT_LE(a.initial[i], 6.0);
    }
  }
  EXPECT_NE(ddep::sample_draw(s, 0).params.alpha, ddep::sample_draw(s, 1).params.alpha);
}

TEST(SampleDraw, UniformMeans) {
  ExperimentSpec s;
  constexpr std::size_t draws = 10000;
  double a = 0, b = 0, p = 0;
  for (std::size_t d = 0; d < draws; ++d) {
    const auto x = ddep::sample_draw(s, d);
    a += x.params.alpha[0];
    b += x.params.beta[1];
    p += x.initial[0];
  }
  const double k = 3.0 / std::sqrt(12.0 * draws);  // three standard errors per unit width
  EXPECT_NEAR(a / draws, 3.5, k * 1.0);
  EXPECT_NEAR(b / draws, 0.45, k * 0.1);
  EXPECT_NEAR(p / draws, 3.0, k * 6.0);
}

TEST(NoiseSeed, FreshPerKappaWithSharedParameters) {
  ExperimentSpec a, b;
  b.kappa = 0.15;
  EXPECT_EQ(ddep::sample_draw(a, 3).params.alpha, ddep::sample_draw(b, 3).params.alpha);
  EXPECT_NE(ddep::noise_seed(a, 3), ddep::noise_seed(b, 3));
  EXPECT_NE(ddep::noise_seed(a, 3), ddep::noise_seed(a, 4));
}

TEST(ExperimentSpec, Validation) {
  auto s = small_spec();
  EXPECT_NO_THROW(s.validate());
  s.n_prime = 3;
  EXPECT_THROW(s.validate(), ddep::ConfigError);
  s = small_spec();
  s.checkpoints = {1000, 100};
  EXPECT_THROW(s.validate(), ddep::ConfigError);
  s = small_spec();
  s.horizon = 500;
  EXPECT_THROW(s.validate(), ddep::ConfigError);
  s = small_spec();
  s.kappa = -0.1;
  EXPECT_THROW(s.validate(), ddep::ConfigError);
  s = small_spec();
  s.v = 1.0;
  EXPECT_THROW(s.validate(), ddep::ConfigError);
  s = small_spec();
  s.n_draws = 0;
  EXPECT_THROW(s.validate(), ddep::ConfigError);
}

TEST(ExperimentSpec, Defaults) {
  ExperimentSpec s;
  s.n_firms = 5;
  EXPECT_EQ(s.effective_i0(), 6u);
  EXPECT_EQ(s.effective_horizon(), 10000u);
  EXPECT_DOUBLE_EQ(s.effective_cross_slope(), 0.25);
  s.n_prime = 3;
  EXPECT_EQ(s.effective_i0(), 4u);
  const auto h = s.regret_horizons();
  EXPECT_EQ(h.front(), 100u);
  EXPECT_EQ(h.back(), 10000u);
  EXPECT_TRUE(std::is_sorted(h.begin(), h.end()));
  EXPECT_EQ(h.size(), 9u);  // quarter-decade grid from 100 to 10000
}

TEST(RunExperiment, WorkerCountDoesNotChangeResults) {
  auto s = small_spec();
  s.n_firms = 3;
  const auto one = ddep::run_experiment(s);
  s.workers = 4;
  const auto four = ddep::run_experiment(s);
  ASSERT_EQ(one.table.rows.size(), four.table.rows.size());
  for (std::size_t k = 0; k < one.table.rows.size(); ++k) {
    EXPECT_EQ(one.table.rows[k].mean_fraction, four.table.rows[k].mean_fraction);
    EXPECT_EQ(one.table.rows[k].stderr_fraction, four.table.rows[k].stderr_fraction);
  }
  for (std::size_t d = 0; d < s.n_draws; ++d)
    EXPECT_EQ(one.draws[d].summary.regret.back().mean_regret, four.draws[d].summary.regret.back().mean_regret);
}

TEST(RunExperiment, LinearOverrideConvergesToKnownEquilibrium) {
  auto s = small_spec();
  s.demand = ddep::DemandFamily::linear;
  s.kappa = 0.0;
  s.checkpoints = {100, 1000, 10000};
  s.n_draws = 3;
  const auto r = ddep::run_experiment(s);
  ASSERT_EQ(r.failures, 0u);
  for (const auto& d : r.draws) {
    EXPECT_NEAR(d.p_star[0], 10.0 / 3.0, 1e-8);
    EXPECT_NEAR(d.p_star[1], 10.0 / 3.0, 1e-8);
    ASSERT_GE(d.summary.stages.size(), 10u);
    EXPECT_LE(std::sqrt(d.summary.stages[9].gap_sq), 1e-6);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    const double f100 = r.table.cell(i, 100).mean_fraction;
    const double f10k = r.table.cell(i, 10000).mean_fraction;
    EXPECT_LT(f100, f10k);
    EXPECT_GT(f10k, 0.99);
    EXPECT_LE(f10k, 1.0 + 1e-12);
  }
}

TEST(Aggregate, MeansAndStandardErrors) {
  auto s = small_spec();
  s.checkpoints = {100};
  std::vector<ddep::DrawResult> draws(4);
  const double f[4] = {0.9, 0.8, 1.0, 0.5};
  for (std::size_t d = 0; d < 4; ++d) {
    draws[d].ok = d != 3;
    draws[d].series.fraction_of_optimal = {{f[d]}, {1.0 - f[d]}};
  }
  const auto t = ddep::aggregate(s, draws);
  const auto& c = t.cell(0, 100);
  EXPECT_EQ(c.n_effective, 3u);
  EXPECT_NEAR(c.mean_fraction, 0.9, 1e-15);
  EXPECT_NEAR(c.stderr_fraction, 0.1 / std::sqrt(3.0), 1e-12);
  EXPECT_FALSE(c.clairvoyant);
  EXPECT_THROW(t.cell(0, 5), ddep::InvalidArgument);
}

TEST(Aggregate, PartialModeFlagsClairvoyantFirms) {
  auto s = small_spec();
  s.n_firms = 3;
  s.n_prime = 2;
  const auto r = ddep::run_experiment(s);
  EXPECT_EQ(r.table.n_prime, 2u);
  EXPECT_FALSE(r.table.cell(1, 100).clairvoyant);
  EXPECT_TRUE(r.table.cell(2, 100).clairvoyant);
}

TEST(ExperimentResult, FailureThresholdIsTenPercent) {
  ddep::ExperimentResult r;
  r.draws.resize(10);
  r.failures = 1;
  EXPECT_FALSE(r.failed());
  r.failures = 2;
  EXPECT_TRUE(r.failed());
}

TEST(RunDraw, ErrorsAreCaptured) {
  auto s = small_spec();
  s.price_low = 5.0;
  s.price_high = 5.0;  // degenerate box
  const auto d = ddep::run_draw(s, 0);
  EXPECT_FALSE(d.ok);
  EXPECT_FALSE(d.error.empty());
}

}  // namespace
