#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "followup/error.hpp"
#include "followup/stability.hpp"

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

TEST(Betensky, NoCensoringCollapses) {
  const auto b = betensky_bounds(sample({{1, E}, {2, E}}));
  for (double t : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    EXPECT_DOUBLE_EQ(b.lower.at(t), b.observed.at(t));
    EXPECT_DOUBLE_EQ(b.upper.at(t), b.observed.at(t));
  }
  EXPECT_DOUBLE_EQ(stability_index(b).value, 0.0);
}

TEST(Betensky, WorkedExample) {
  const double delta = 0.01;
  const auto b = betensky_bounds(sample({{1, C}, {2, E}}), delta);
  EXPECT_DOUBLE_EQ(b.upper.at(1.5), 1.0);
  EXPECT_DOUBLE_EQ(b.upper.at(2.0), 0.5);
  EXPECT_DOUBLE_EQ(b.lower.at(1.0), 1.0);
  EXPECT_DOUBLE_EQ(b.lower.at(1.0 + delta), 0.5);
  EXPECT_DOUBLE_EQ(b.lower.at(2.0), 0.0);
}

TEST(Betensky, IndexUnderZeroDelay) {
  const auto idx = stability_index(sample({{1, C}, {2, E}}), 0.0);
  EXPECT_DOUBLE_EQ(idx.value, 0.25);
  EXPECT_DOUBLE_EQ(idx.horizon, 2.0);
}

TEST(Betensky, IndexConvergesAsDelayShrinks) {
  double prev = 1.0;
  for (double delta : {0.1, 0.01, 0.001}) {
    const double v = stability_index(sample({{1, C}, {2, E}}), delta).value;
    EXPECT_LT(std::fabs(v - 0.25), std::fabs(prev - 0.25) + 1e-15);
    prev = v;
  }
  EXPECT_NEAR(prev, 0.25, 1e-3);
}

TEST(Betensky, RejectsEmptyAndNegativeDelay) {
  EXPECT_THROW(betensky_bounds(ObservedSample{}), InputError);
  EXPECT_THROW(betensky_bounds(sample({{1, E}}), -1.0), InputError);
}

TEST(Betensky, NoEventsIsDegenerate) {
  const auto b = betensky_bounds(sample({{1, C}, {3, C}}));
  EXPECT_TRUE(b.degenerate);
  EXPECT_DOUBLE_EQ(b.upper.at(10), 1.0);
}

namespace {

// Random sample of whole-day times.
ObservedSample grid_sample(std::mt19937_64& rng, std::size_t n, bool all_events) {
  std::geometric_distribution<int> days(0.01);
  std::bernoulli_distribution event(0.6);
  ObservedSample s(n);
  for (auto& o : s) o = {1.0 + days(rng), all_events || event(rng)};
  return s;
}

void expect_ordered_and_index_iff_censored(const ObservedSample& s, double delta, int rep) {
  const auto b = betensky_bounds(s, delta);
  double max_time = 0.0;
  for (const auto& o : s) max_time = std::max(max_time, o.time);
  // With zero delay, censoring at the last follow-up time moves the curves on a null set only.
  bool censored = false;
  for (const auto& o : s) {
    censored |= !o.event && (delta > 0.0 || o.time < max_time);
    for (double t : {o.time * 0.5, o.time, o.time + 0.5, o.time + delta, o.time * 1.5}) {
      ASSERT_LE(b.lower.at(t), b.observed.at(t) + 1e-15) << rep << " t=" << t;
      ASSERT_LE(b.observed.at(t), b.upper.at(t) + 1e-15) << rep << " t=" << t;
    }
  }
  const double idx = stability_index(s, delta).value;
  if (censored) {
    EXPECT_GT(idx, 0.0) << rep;
  } else {
    EXPECT_EQ(idx, 0.0) << rep;
  }
  EXPECT_LE(idx, 1.0);
}

}  // namespace

TEST(Betensky, OrderedOnDayResolutionData) {
  // Times in days with a one-day delay: no event can fall strictly inside (c, c + delay).
  std::mt19937_64 rng(123);
  for (int rep = 0; rep < 300; ++rep) {
    const auto s = grid_sample(rng, 1 + rep % 40, rep % 3 == 0);
    expect_ordered_and_index_iff_censored(s, 1.0, rep);
  }
}

TEST(Betensky, OrderedWithZeroDelayOnContinuousData) {
  std::mt19937_64 rng(321);
  std::exponential_distribution<double> exp(0.05);
  std::bernoulli_distribution event(0.6);
  for (int rep = 0; rep < 300; ++rep) {
    ObservedSample s(1 + rep % 40);
    for (auto& o : s) o = {exp(rng), rep % 3 == 0 || event(rng)};
    expect_ordered_and_index_iff_censored(s, 0.0, rep);
  }
}

TEST(Betensky, EventInsideTheDelayWindowCanLiftTheLowerBound) {
  // Censored at 1, event half a delay later: the lower curve still counts the censored
  // subject at risk, so it sits above the observed curve there.
  const double delta = kOneDay;
  const auto s = sample({{1.0, C}, {1.0 + delta / 2, E}, {5.0, E}});
  const auto b = betensky_bounds(s, delta);
  const double t = 1.0 + delta / 2;
  EXPECT_NEAR(b.observed.at(t), 0.5, 1e-15);
  EXPECT_NEAR(b.lower.at(t), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(b.lower.at(1.0 + delta), 1.0 / 3.0, 1e-15);
}

TEST(CrossArm, IdenticalUncensoredArmsGiveZero) {
  const auto arm = sample({{1, E}, {2, E}, {3, E}});
  EXPECT_NEAR(cross_arm_extreme_rmst({arm, arm}).value, 0.0, 1e-12);
}

TEST(CrossArm, CensoredArmsGivePositiveBound) {
  const auto arm = sample({{1, C}, {2, E}});
  const auto x = cross_arm_extreme_rmst({arm, arm});
  EXPECT_GT(x.value, 0.0);
  EXPECT_TRUE(x.extreme_deterministic_bound);
  const auto b = betensky_bounds(arm);
  EXPECT_NEAR(x.value, area_under(b.upper, x.horizon) - area_under(b.lower, x.horizon), 1e-12);
}
