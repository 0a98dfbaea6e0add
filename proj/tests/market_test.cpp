#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ddep/market.hpp"
#include "ddep/rng.hpp"

namespace {

using ddep::LinearDemand;
using ddep::LinearDemandParams;
using ddep::MnlDemand;
using ddep::MnlDemandParams;
using ddep::PriceBox;
using ddep::PriceVector;

MnlDemand symmetric_mnl() { return MnlDemand({{3.0, 3.0}, {0.4, 0.4}}); }

TEST(PriceVector, RejectsOutOfBoxAndProjects) {
  const auto box = PriceBox::uniform(2, 0.0, 6.0);
  EXPECT_THROW(PriceVector({1.0, 7.0}, box), ddep::InvalidArgument);
  EXPECT_THROW(PriceVector({1.0}, box), ddep::InvalidArgument);
  const auto p = PriceVector::projected({-1.0, 7.0}, box);
  EXPECT_EQ(p[0], 0.0);
  EXPECT_EQ(p[1], 6.0);
}

TEST(MarketConfig, Invariants) {
  EXPECT_THROW(PriceBox({1.0}, {1.0}), ddep::InvalidArgument);
  EXPECT_THROW(ddep::MarketConfig(0, PriceBox(), 0.0, 10), ddep::InvalidArgument);
  EXPECT_THROW(ddep::MarketConfig(2, PriceBox::uniform(2, 0, 6), 0.0, 0), ddep::InvalidArgument);
  EXPECT_THROW(ddep::MarketConfig(2, PriceBox::uniform(3, 0, 6), 0.0, 5), ddep::InvalidArgument);
  EXPECT_NO_THROW(ddep::MarketConfig(2, PriceBox::uniform(2, 0, 6), 0.05, 5));
}

TEST(MnlDemand, RejectsInvalidParams) {
  EXPECT_THROW(MnlDemand({{3.0}, {0.0}}), ddep::InvalidArgument);
  EXPECT_THROW(MnlDemand({{3.0, 1.0}, {0.4}}), ddep::InvalidArgument);
  EXPECT_THROW(MnlDemand({{INFINITY}, {0.4}}), ddep::InvalidArgument);
}

TEST(MnlDemand, SymmetricMeanMatchesHandValue) {
  const auto m = symmetric_mnl();
  const std::vector<double> p{3.0, 3.0};
  // e^{1.8} / (1 + 2 e^{1.8})
  EXPECT_NEAR(m.mean(p, 0), 0.46183000667465574, 1e-14);
  EXPECT_DOUBLE_EQ(m.mean(p, 0), m.mean(p, 1));
}

TEST(MnlDemand, SymmetricGradientsMatchHandValues) {
  const auto m = symmetric_mnl();
  const std::vector<double> p{3.0, 3.0};
  EXPECT_NEAR(m.gradient(p, 0, 0), -0.09941722064381729, 1e-12);
  EXPECT_NEAR(m.gradient(p, 0, 1), 0.08531478202604503, 1e-12);
}

TEST(MnlDemand, SharesSumBelowOne) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const std::size_t n = 1 + s % 5;
    MnlDemandParams params;
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      params.alpha.push_back(ddep::rng::uniform(-2, 6, s, i, 1));
      params.beta.push_back(ddep::rng::uniform(0.1, 2, s, i, 2));
      p[i] = ddep::rng::uniform(0, 6, s, i, 3);
    }
    const MnlDemand m(params);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double l = m.mean(p, i);
      ASSERT_GT(l, 0.0);
      ASSERT_LT(l, 1.0);
      total += l;
    }
    EXPECT_LT(total, 1.0);
  }
}

// Property: analytic partials have the right signs and agree with central
// differences of the mean (step 1e-6, relative tolerance 1e-5).
TEST(MnlDemand, GradientMatchesFiniteDifferencesAndSigns) {
  constexpr double h = 1e-6;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const std::size_t n = 1 + s % 5;
    MnlDemandParams params;
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      params.alpha.push_back(ddep::rng::uniform(3, 4, s, i, 1));
      params.beta.push_back(ddep::rng::uniform(0.4, 0.5, s, i, 2));
      p[i] = ddep::rng::uniform(0, 6, s, i, 3);
    }
    const MnlDemand m(params);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        auto up = p, dn = p;
        up[j] += h;
        dn[j] -= h;
        const double fd = (m.mean(up, i) - m.mean(dn, i)) / (2 * h);
        const double g = m.gradient(p, i, j);
        ASSERT_NEAR(g, fd, 1e-5 * std::abs(fd) + 1e-10) << "seed " << s;
        if (i == j) {
          ASSERT_LT(g, 0.0);
        } else {
          ASSERT_GT(g, 0.0);
        }
      }
      auto up = p, dn = p;
      up[i] += 1e-4;
      dn[i] -= 1e-4;
      const double fd2 = (m.gradient(up, i, i) - m.gradient(dn, i, i)) / 2e-4;
      ASSERT_NEAR(m.own_curvature(p, i), fd2, 1e-6);
    }
  }
}

TEST(LinearDemand, MeanIsExactAffineForm) {
  LinearDemandParams params;
  params.intercept = {10.0, 7.0, 5.0};
  params.own_slope = {2.0, 1.5, 1.0};
  params.cross_slope = {{0.0, 1.0, 0.5}, {0.25, 0.0, 0.0}, {0.0, 0.75, 0.0}};
  const LinearDemand m(params);
  const std::vector<double> p{1.25, 2.5, 3.75};
  EXPECT_EQ(m.mean(p, 0), 10.0 - 2.0 * 1.25 + 1.0 * 2.5 + 0.5 * 3.75);
  EXPECT_EQ(m.mean(p, 1), 7.0 - 1.5 * 2.5 + 0.25 * 1.25);
  EXPECT_EQ(m.mean(p, 2), 5.0 - 1.0 * 3.75 + 0.75 * 2.5);
  EXPECT_EQ(m.gradient(p, 0, 0), -2.0);
  EXPECT_EQ(m.gradient(p, 0, 2), 0.5);
  EXPECT_EQ(m.own_curvature(p, 0), 0.0);
}

TEST(LinearDemand, RejectsInvalidParams) {
  auto params = LinearDemandParams::symmetric(2, 10, 2, 1);
  params.own_slope[0] = 0.0;
  EXPECT_THROW(LinearDemand{params}, ddep::InvalidArgument);
  params = LinearDemandParams::symmetric(2, 10, 2, 1);
  params.cross_slope[0][1] = -0.1;
  EXPECT_THROW(LinearDemand{params}, ddep::InvalidArgument);
  params = LinearDemandParams::symmetric(2, 10, 2, 1);
  params.cross_slope[1][1] = 0.1;
  EXPECT_THROW(LinearDemand{params}, ddep::InvalidArgument);
}

TEST(RealizeDemand, ZeroNoiseIsBitIdenticalToMean) {
  const auto m = symmetric_mnl();
  const std::vector<double> p{2.5, 3.5};
  const ddep::NoiseSpec noise(0.0, 99);
  const auto d = ddep::realize_demand(m, noise, p, 17);
  EXPECT_EQ(d, m.means(p));
}

TEST(RealizeDemand, DeterministicPerPeriod) {
  const auto m = symmetric_mnl();
  const std::vector<double> p{2.5, 3.5};
  const ddep::NoiseSpec noise(0.1, 5);
  EXPECT_EQ(ddep::realize_demand(m, noise, p, 3), ddep::realize_demand(m, noise, p, 3));
  EXPECT_NE(ddep::realize_demand(m, noise, p, 3), ddep::realize_demand(m, noise, p, 4));
  EXPECT_THROW(ddep::NoiseSpec(-1.0, 0), ddep::InvalidArgument);
}

TEST(RealizeDemand, SampleMeanConvergesToLambda) {
  const auto m = symmetric_mnl();
  const std::vector<double> p{3.0, 3.0};
  const double lambda = m.mean(p, 0);
  const double sigma = 0.05 * lambda;
  const ddep::NoiseSpec noise(sigma, 2024);
  constexpr std::size_t draws = 100000;
  std::vector<double> sums(2, 0.0);
  for (std::size_t t = 1; t <= draws; ++t) {
    const auto d = ddep::realize_demand(m, noise, p, t);
    sums[0] += d[0];
    sums[1] += d[1];
  }
  for (double s : sums) EXPECT_NEAR(s / draws, lambda, 3 * sigma / std::sqrt(double(draws)));
}

TEST(RevenueConcavity, LinearIsConcaveAndMnlViolationsAreCounted) {
  const LinearDemand lin(LinearDemandParams::symmetric(2, 10, 2, 1));
  const auto box = PriceBox::uniform(2, 0, 6);
  const auto lin_report = ddep::check_revenue_concavity(lin, box, 50, 1);
  EXPECT_EQ(lin_report.checked, 100u);
  EXPECT_EQ(lin_report.violations, 0u);
  // d^2/dp^2 of p (10 - 2p + q) is -4.
  EXPECT_NEAR(lin_report.worst_curvature, -4.0, 1e-4);

  // MNL revenue loses own-price concavity at high prices; the check reports
  // rather than asserts.
  const auto mnl = symmetric_mnl();
  const auto mnl_report = ddep::check_revenue_concavity(mnl, box, 100, 1);
  EXPECT_EQ(mnl_report.checked, 200u);
  EXPECT_LE(mnl_report.violations, mnl_report.checked);
  RecordProperty("mnl_concavity_violations", int(mnl_report.violations));
}

}  // namespace
