#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "followup/error.hpp"
#include "followup/stats.hpp"
#include "followup/survival.hpp"
#include "oracles.hpp"

using namespace followup;

namespace {

ObservedSample sample(std::initializer_list<std::pair<double, bool>> items) {
  ObservedSample out;
  for (auto [t, e] : items) out.push_back({t, e});
  return out;
}

constexpr bool E = true;
constexpr bool C = false;

}  // namespace

TEST(KmFit, NoCensoringIsEmpiricalSurvival) {
  const auto km = km_fit(sample({{1, E}, {2, E}, {3, E}}));
  EXPECT_DOUBLE_EQ(km.at(1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(km.at(2), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(km.at(3), 0.0);
  EXPECT_DOUBLE_EQ(km.at(0.5), 1.0);
}

TEST(KmFit, CensoringInTheMiddle) {
  const auto km = km_fit(sample({{1, E}, {2, C}, {3, E}}));
  EXPECT_DOUBLE_EQ(km.at(1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(km.at(2), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(km.at(2.99), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(km.at(3), 0.0);
}

TEST(KmFit, CensoredFirst) {
  const auto km = km_fit(sample({{1, C}, {2, E}}));
  EXPECT_DOUBLE_EQ(km.at(0), 1.0);
  EXPECT_DOUBLE_EQ(km.at(1.5), 1.0);
  EXPECT_DOUBLE_EQ(km.at(2), 0.0);
}

TEST(KmFit, TiedCensoringStaysInRiskSet) {
  const auto km = km_fit(sample({{1, E}, {1, C}, {2, E}}));
  EXPECT_DOUBLE_EQ(km.at(1), 2.0 / 3.0);
  EXPECT_EQ(km.knots.front().n_risk, 3u);
  EXPECT_DOUBLE_EQ(km.at(2), 0.0);
}

TEST(KmFit, RejectsBadInput) {
  EXPECT_THROW(km_fit(ObservedSample{}), InputError);
  EXPECT_THROW(km_fit(sample({{-1, E}})), InputError);
  EXPECT_THROW(km_fit(sample({{NAN, E}})), InputError);
}

TEST(KmFit, MatchesRedistributeToTheRightOnRandomSamples) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> time(1, 8);
  std::bernoulli_distribution event(0.6);
  for (int rep = 0; rep < 300; ++rep) {
    ObservedSample s(1 + rep % 25);
    for (auto& o : s) o = {static_cast<double>(time(rng)), event(rng)};
    const auto km = km_fit(s);
    for (double t = 0.0; t <= 9.0; t += 0.5) {
      ASSERT_NEAR(km.at(t), oracle::redistribute_to_right(s, t), 1e-12) << "rep " << rep;
    }
  }
}

TEST(Greenwood, HandComputation) {
  const auto km = km_fit(sample({{1, C}, {2, E}, {3, E}}));
  EXPECT_DOUBLE_EQ(km.at(2), 0.5);
  const auto se = greenwood_se(km, 2);
  EXPECT_NEAR(se.se, 0.5 * std::sqrt(1.0 / 2.0), 1e-12);
  EXPECT_NEAR(se.se, 0.3536, 5e-5);
  EXPECT_FALSE(se.saturated);
  EXPECT_DOUBLE_EQ(greenwood_se(km, 0).se, 0.0);
}

TEST(Greenwood, SaturatedWhenRiskSetExhausted) {
  const auto km = km_fit(sample({{1, E}}));
  EXPECT_DOUBLE_EQ(km.at(1), 0.0);
  EXPECT_TRUE(greenwood_se(km, 1).saturated);
}

TEST(LogLogInterval, DegenerateAtOne) {
  const auto ci = loglog_interval(1.0, 0.0, 0.95);
  EXPECT_TRUE(ci.degenerate);
  EXPECT_DOUBLE_EQ(ci.lower, 1.0);
  EXPECT_DOUBLE_EQ(ci.upper, 1.0);
}

TEST(LogLogInterval, ClosedForm) {
  const double s = 0.5;
  const double se = 0.3536;
  const auto ci = loglog_interval(s, se, 0.95);
  const double z = 1.959963984540054;
  const double w = z * se / (s * std::fabs(std::log(s)));
  EXPECT_NEAR(ci.lower, std::pow(s, std::exp(w)), 1e-12);
  EXPECT_NEAR(ci.upper, std::pow(s, std::exp(-w)), 1e-12);
  EXPECT_GE(ci.lower, 0.0);
  EXPECT_LE(ci.upper, 1.0);
  EXPECT_LT(ci.lower, 0.5);
  EXPECT_GT(ci.upper, 0.5);
}

TEST(LogLogInterval, WiderWithLargerSe) {
  const auto a = loglog_interval(0.6, 0.05, 0.95);
  const auto b = loglog_interval(0.6, 0.08, 0.95);
  EXPECT_LT(b.lower, a.lower);
  EXPECT_GT(b.upper, a.upper);
}

TEST(KmQuantile, MedianOfFourEvents) {
  const auto km = km_fit(sample({{1, E}, {2, E}, {3, E}, {4, E}}));
  const auto q = km_quantile(km, 0.5, 0.95);
  EXPECT_DOUBLE_EQ(q.point, 2.0);
  EXPECT_LE(q.lower, 2.0);
  EXPECT_GE(q.upper, 2.0);
}

TEST(KmQuantile, NotReachedWhenAllCensored) {
  const auto km = km_fit(sample({{1, C}, {2, C}, {3, C}}));
  const auto q = km_quantile(km, 0.5, 0.95);
  EXPECT_FALSE(q.reached());
}

TEST(KmQuantile, ExponentialMedian) {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> exp(0.012);
  ObservedSample s(200000);
  for (auto& o : s) o = {exp(rng), true};
  const auto q = km_quantile(km_fit(s), 0.5, 0.95);
  EXPECT_NEAR(q.point, std::log(2.0) / 0.012, 0.6);
  EXPECT_NEAR(std::log(2.0) / 0.012, 57.76, 0.005);
}

TEST(Milestone, OriginIsDegenerate) {
  const auto km = km_fit(sample({{1, E}, {2, C}, {3, E}}));
  const auto m = milestone_estimate(km, 0.0, 0.95);
  EXPECT_DOUBLE_EQ(m.estimate.point, 1.0);
  EXPECT_TRUE(m.estimate.degenerate);
}

TEST(Milestone, GreenwoodInterval) {
  const auto km = km_fit(sample({{1, E}, {2, C}, {3, E}}));
  const auto m = milestone_estimate(km, 2.0, 0.95);
  EXPECT_DOUBLE_EQ(m.estimate.point, 2.0 / 3.0);
  const double se = (2.0 / 3.0) * std::sqrt(1.0 / (3.0 * 2.0));
  ASSERT_TRUE(m.estimate.se.has_value());
  EXPECT_NEAR(*m.estimate.se, se, 1e-12);
  const auto expected = loglog_interval(2.0 / 3.0, se, 0.95);
  EXPECT_NEAR(m.estimate.lower, expected.lower, 1e-12);
  EXPECT_NEAR(m.estimate.upper, expected.upper, 1e-12);
  EXPECT_EQ(m.n_risk, 2u);
  EXPECT_FALSE(m.estimate.extrapolated);
}

TEST(Milestone, BeyondDataIsFlagged) {
  const auto km = km_fit(sample({{1, E}, {2, C}, {3, E}}));
  EXPECT_TRUE(milestone_estimate(km, 10.0, 0.95).estimate.extrapolated);
}

TEST(Rmst, RectangleSum) {
  const auto km = km_fit(sample({{1, E}, {2, E}, {3, E}}));
  EXPECT_DOUBLE_EQ(rmst(km, 3.0).point, 2.0);
  EXPECT_DOUBLE_EQ(rmst(km, 0.0).point, 0.0);
}

TEST(Rmst, NoEventsBeforeTau) {
  const auto km = km_fit(sample({{5, E}, {6, C}}));
  const auto r = rmst(km, 4.0);
  EXPECT_DOUBLE_EQ(r.point, 4.0);
  EXPECT_DOUBLE_EQ(r.se.value_or(-1.0), 0.0);
}

TEST(Rmst, TauBeyondDataNamesTheLimit) {
  const auto km = km_fit(sample({{1, E}, {2, E}, {3, E}}));
  try {
    rmst(km, 4.0);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
  }
}

TEST(Rmst, VarianceMatchesDirectFormula) {
  // Var = sum over event times t_j <= tau of A_j^2 d_j / (n_j (n_j - d_j)),
  // A_j = area under S on [t_j, tau].
  const auto s = sample({{1, E}, {2, C}, {3, E}, {4, E}, {5, C}, {6, E}});
  const auto km = km_fit(s);
  const double tau = 5.5;
  double var = 0.0;
  for (const auto& k : km.knots) {
    if (k.time > tau || k.n_event == 0 || k.n_risk == k.n_event) continue;
    const double a = area_under(km, tau) - area_under(km, k.time);
    var += a * a * k.n_event / (static_cast<double>(k.n_risk) * (k.n_risk - k.n_event));
  }
  EXPECT_NEAR(*rmst(km, tau).se, std::sqrt(var), 1e-12);
}

TEST(ReverseKm, NoCensoringIsFlat) {
  const auto g = reverse_km(sample({{1, E}, {2, E}}));
  EXPECT_DOUBLE_EQ(g.at(5), 1.0);
}

TEST(ReverseKm, HandComputation) {
  const auto g = reverse_km(sample({{4, E}, {8, C}, {3, C}, {4, C}}));
  EXPECT_DOUBLE_EQ(g.at(3), 0.75);
  EXPECT_DOUBLE_EQ(g.at(4), 0.5);
  EXPECT_DOUBLE_EQ(g.at(8), 0.0);
}

TEST(ReverseKm, FlipTwiceRecoversKm) {
  const auto s = sample({{4, E}, {8, C}, {3, C}, {4, C}, {6, E}});
  const auto twice = flip_indicators(flip_indicators(s));
  const auto a = km_fit(s);
  const auto b = km_fit(twice);
  ASSERT_EQ(a.knots.size(), b.knots.size());
  for (std::size_t i = 0; i < a.knots.size(); ++i) {
    EXPECT_EQ(a.knots[i].time, b.knots[i].time);
    EXPECT_EQ(a.knots[i].value, b.knots[i].value);
  }
}

TEST(AtRisk, DirectCount) {
  const auto s = sample({{1, E}, {2, C}, {3, E}});
  const std::vector<double> grid = {0, 2, 4};
  EXPECT_EQ(at_risk_table(s, grid), (std::vector<std::size_t>{3, 2, 0}));
  EXPECT_TRUE(at_risk_table(s, std::vector<double>{}).empty());
}

TEST(Ecdf, Basics) {
  const std::vector<double> v = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(ecdf(v).at(2), 0.5);
  const std::vector<double> same = {3, 3, 3};
  const auto f = ecdf(same);
  ASSERT_EQ(f.knots.size(), 1u);
  EXPECT_DOUBLE_EQ(f.at(2.9), 0.0);
  EXPECT_DOUBLE_EQ(f.at(3), 1.0);
}

TEST(KmProperties, MonotoneAndBounded) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> exp(0.1);
  std::bernoulli_distribution event(0.7);
  for (int rep = 0; rep < 200; ++rep) {
    ObservedSample s(50);
    for (auto& o : s) o = {exp(rng), event(rng)};
    const auto km = km_fit(s);
    double prev = 1.0;
    for (const auto& k : km.knots) {
      EXPECT_LE(k.value, prev);
      EXPECT_GE(k.value, 0.0);
      prev = k.value;
      const auto ci = km_ci(km, k.time, 0.95);
      EXPECT_LE(ci.lower, k.value + 1e-15);
      EXPECT_GE(ci.upper, k.value - 1e-15);
    }
  }
}
