#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "followup/effects.hpp"
#include "followup/error.hpp"
#include "followup/sim.hpp"
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

TwoArmSample two(ObservedSample control, ObservedSample treatment) {
  return {std::move(control), std::move(treatment), "control", "treatment"};
}

TwoArmSample random_two_arm(std::mt19937_64& rng, int max_n) {
  std::uniform_int_distribution<int> n(1, max_n);
  std::uniform_int_distribution<int> time(1, 6);
  std::bernoulli_distribution event(0.65);
  TwoArmSample s;
  s.control.resize(n(rng));
  s.treatment.resize(n(rng));
  for (auto& o : s.control) o = {static_cast<double>(time(rng)), event(rng)};
  for (auto& o : s.treatment) o = {static_cast<double>(time(rng)), event(rng)};
  s.control.push_back({1.0, true});
  return s;
}

}  // namespace

TEST(Logrank, IdenticalArms) {
  const auto r = logrank(two(sample({{1, E}, {2, E}}), sample({{1, E}, {2, E}})));
  EXPECT_NEAR(r.o_minus_e, 0.0, 1e-15);
  EXPECT_NEAR(r.z, 0.0, 1e-15);
}

TEST(Logrank, WorkedExample) {
  // arm A {1e,2e} is the treatment arm, B {3e,4e} control.
  const auto r = logrank(two(sample({{3, E}, {4, E}}), sample({{1, E}, {2, E}})));
  EXPECT_NEAR(r.o_minus_e, 7.0 / 6.0, 1e-12);
  EXPECT_NEAR(r.variance, 0.25 + 2.0 / 9.0 + 0.0, 1e-12);
  EXPECT_NEAR(r.variance, 0.4722, 5e-5);
  EXPECT_NEAR(r.chi2, 2.882, 5e-4);
  EXPECT_EQ(r.event_times, 4u);
}

TEST(Logrank, SwappingArmsFlipsSign) {
  const auto s = two(sample({{3, E}, {4, E}, {5, C}}), sample({{1, E}, {2, E}, {4, C}}));
  const auto a = logrank(s);
  const auto b = logrank(s.swapped());
  EXPECT_NEAR(a.o_minus_e, -b.o_minus_e, 1e-12);
  EXPECT_NEAR(a.chi2, b.chi2, 1e-12);
}

TEST(Logrank, NoEventsIsAnError) {
  EXPECT_THROW(logrank(two(sample({{1, C}}), sample({{2, C}}))), ComputationError);
}

TEST(Logrank, MatchesHypergeometricEnumeration) {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 300; ++rep) {
    const auto s = random_two_arm(rng, 7);
    const auto r = logrank(s);
    const auto o = oracle::logrank_enumerated(s);
    ASSERT_NEAR(r.o_minus_e, o.o_minus_e, 1e-12) << rep;
    ASSERT_NEAR(r.variance, o.variance, 1e-12) << rep;
  }
}

TEST(Logrank, FlemingHarringtonMatchesDirectWeightedSums) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const auto s = random_two_arm(rng, 12);
    for (auto w : {LogrankWeights{1.0, 0.0}, LogrankWeights{0.0, 1.0}, LogrankWeights{0.5, 2.0}}) {
      ObservedSample pooled = s.control;
      pooled.insert(pooled.end(), s.treatment.begin(), s.treatment.end());
      const auto km = km_fit(pooled);
      std::map<double, int> event_times;
      for (const auto& o : pooled) {
        if (o.event) event_times[o.time] = 0;
      }
      double u = 0.0;
      double v = 0.0;
      for (const auto& [t, unused] : event_times) {
        double n1 = 0, n = 0, d1 = 0, d = 0;
        for (const auto& o : s.treatment) {
          n1 += o.time >= t;
          d1 += o.time == t && o.event;
        }
        for (const auto& o : pooled) {
          n += o.time >= t;
          d += o.time == t && o.event;
        }
        const double sm = km.before(t);
        const double wt = std::pow(sm, w.rho) * std::pow(1.0 - sm, w.gamma);
        u += wt * (d1 - d * n1 / n);
        if (n > 1) v += wt * wt * d * (n1 / n) * (1 - n1 / n) * (n - d) / (n - 1);
      }
      const auto r = logrank(s, w);
      ASSERT_NEAR(r.o_minus_e, u, 1e-12);
      ASSERT_NEAR(r.variance, v, 1e-12);
    }
  }
}

TEST(Logrank, LateWeightsShrinkEarlyDifferences) {
  // Treatment fails early, the arms agree afterwards.
  ObservedSample ctl;
  ObservedSample trt;
  for (int i = 0; i < 30; ++i) {
    ctl.push_back({10.0 + i, true});
    trt.push_back({10.0 + i, true});
  }
  for (int i = 0; i < 8; ++i) trt.push_back({1.0 + 0.5 * i, true});
  for (int i = 0; i < 8; ++i) ctl.push_back({50.0 + i, false});
  const auto s = two(ctl, trt);
  const auto flat = logrank(s);
  const auto late = logrank(s, {0.0, 1.0});
  EXPECT_LT(std::fabs(late.z), std::fabs(flat.z));
}

TEST(Cox, SymmetricDataGivesZero) {
  const auto s = two(sample({{1, E}, {2, C}, {3, E}}), sample({{1, E}, {2, C}, {3, E}}));
  const auto fit = cox_two_group(s);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.log_hr, 0.0, 1e-10);
}

TEST(Cox, MonotoneLikelihoodIsSignalled) {
  const auto s = two(sample({{2, C}}), sample({{1, E}}));
  try {
    cox_two_group(s);
    FAIL() << "expected MonotoneLikelihood";
  } catch (const MonotoneLikelihood& e) {
    EXPECT_EQ(e.direction(), +1);
  }
  try {
    cox_two_group(s.swapped());
    FAIL() << "expected MonotoneLikelihood";
  } catch (const MonotoneLikelihood& e) {
    EXPECT_EQ(e.direction(), -1);
  }
}

TEST(Cox, WorkedExampleAgainstGridSearch) {
  // arm A {1e,3e} treatment, B {2e,4e}: L = t/(2t+2) * 1/(t+2) * t/(t+1).
  const auto s = two(sample({{2, E}, {4, E}}), sample({{1, E}, {3, E}}));
  auto closed = [](double b) {
    const double t = std::exp(b);
    return std::log(t / (2 * t + 2)) + std::log(1 / (t + 2)) + std::log(t / (t + 1));
  };
  for (double b : {-1.0, 0.0, 0.7}) EXPECT_NEAR(oracle::cox_loglik(s, b), closed(b), 1e-12);
  const auto fit = cox_two_group(s);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.log_hr, oracle::cox_grid_argmax(s, -5.0, 5.0, 1e-3), 1e-7);
  EXPECT_NEAR(fit.score, 0.0, 1e-8);
}

TEST(Cox, ScoreAndInformationAreDerivativesOfLoglik) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 50; ++rep) {
    const auto s = random_two_arm(rng, 15);
    for (double b : {-0.8, 0.0, 0.4}) {
      const double h = 1e-4;
      const auto sc = cox_score(s, b);
      EXPECT_NEAR(sc.loglik, oracle::cox_loglik(s, b), 1e-10);
      const double d1 = (oracle::cox_loglik(s, b + h) - oracle::cox_loglik(s, b - h)) / (2 * h);
      const double ds = (cox_score(s, b + h).score - cox_score(s, b - h).score) / (2 * h);
      EXPECT_NEAR(sc.score, d1, 1e-6);
      EXPECT_NEAR(sc.information, -ds, 1e-6);
    }
  }
}

TEST(Cox, RandomTiedSamplesMatchGridSearch) {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int rep = 0; rep < 200 && checked < 60; ++rep) {
    const auto s = random_two_arm(rng, 10);
    CoxResult fit;
    try {
      fit = cox_two_group(s);
    } catch (const MonotoneLikelihood&) {
      continue;
    }
    ++checked;
    EXPECT_NEAR(fit.log_hr, oracle::cox_grid_argmax(s, -8.0, 8.0, 1e-2), 1e-6);
    EXPECT_NEAR(fit.hr_ci.point, std::exp(fit.log_hr), 1e-12);
    EXPECT_LT(fit.hr_ci.lower, fit.hr_ci.point);
    EXPECT_GT(fit.hr_ci.upper, fit.hr_ci.point);
  }
  EXPECT_GE(checked, 30);
}

TEST(PhTest, NeedsTwoEvents) {
  const auto s = two(sample({{1, E}, {2, C}}), sample({{3, C}}));
  CoxResult fit;
  fit.converged = true;
  EXPECT_THROW(schoenfeld_ph_test(s, fit), ComputationError);
}

TEST(PhTest, RejectsUnconvergedFit) {
  const auto s = two(sample({{2, E}, {4, E}}), sample({{1, E}, {3, E}}));
  CoxResult fit;
  fit.converged = false;
  EXPECT_THROW(schoenfeld_ph_test(s, fit), ComputationError);
}

TEST(PhTest, CalibratedUnderPhAndSensitiveToDelayedSeparation) {
  auto rejection = [](const SimConfig& config, std::size_t reps) {
    const auto rejected = map_replicates(
        config, reps, 31,
        [](std::size_t, const Snapshot& snap) {
          const auto s = to_two_arm(snap, "control", "treatment");
          return schoenfeld_ph_test(s, cox_two_group(s)).p < 0.05 ? 1 : 0;
        },
        1);
    double sum = 0;
    for (int r : rejected) sum += r;
    return sum / static_cast<double>(reps);
  };
  const double ph = rejection(SimConfig::proportional_hazards(0.65), 300);
  EXPECT_GT(ph, 0.015);
  EXPECT_LT(ph, 0.095);
  const double delayed = rejection(SimConfig::delayed_separation(), 300);
  EXPECT_GT(delayed, 0.15);
}

TEST(MilestoneDifference, StatedStandardErrors) {
  const auto d = difference_interval(0.8, 0.05, 0.6, 0.05, 0.95);
  EXPECT_NEAR(d.point, 0.2, 1e-15);
  EXPECT_NEAR(d.lower, 0.061, 5e-4);
  EXPECT_NEAR(d.upper, 0.339, 5e-4);
}

TEST(MilestoneDifference, IdenticalArmsAndOrigin) {
  const auto s = two(sample({{1, E}, {2, C}, {3, E}}), sample({{1, E}, {2, C}, {3, E}}));
  EXPECT_DOUBLE_EQ(milestone_difference(s, 2.0).point, 0.0);
  const auto origin = milestone_difference(s, 0.0);
  EXPECT_DOUBLE_EQ(origin.point, 0.0);
  EXPECT_TRUE(origin.degenerate);
  EXPECT_TRUE(milestone_difference(s, 9.0).extrapolated);
}

TEST(RmstDifference, IdenticalArms) {
  const auto s = two(sample({{1, E}, {2, C}, {3, E}}), sample({{1, E}, {2, C}, {3, E}}));
  const auto r = rmst_difference(s, TauPolicy::fixed(2.5));
  EXPECT_DOUBLE_EQ(r.estimate.point, 0.0);
  EXPECT_EQ(r.tau_rule, "fixed");
}

TEST(RmstDifference, NoEventsBeforeTau) {
  const auto s = two(sample({{5, E}, {6, C}}), sample({{7, E}, {8, C}}));
  const auto r = rmst_difference(s, TauPolicy::fixed(4.0));
  EXPECT_DOUBLE_EQ(r.estimate.point, 0.0);
  EXPECT_DOUBLE_EQ(r.estimate.se.value_or(-1), 0.0);
}

TEST(RmstDifference, MinOfMaxObserved) {
  const auto s = two(sample({{5, E}, {6, C}}), sample({{7, E}, {8, C}}));
  const auto r = rmst_difference(s, TauPolicy::min_of_max_observed());
  EXPECT_DOUBLE_EQ(r.tau_used, 6.0);
  EXPECT_EQ(r.tau_rule, "min-of-max-observed");
  EXPECT_THROW(rmst_difference(s, TauPolicy::fixed(7.0)), InputError);
}

TEST(RmstDifference, UnbiasedOverSimulatedTrials) {
  const auto config = SimConfig::delayed_separation();
  struct Out {
    double diff = 0.0;
    double tau = 0.0;
  };
  const auto results = map_replicates(
      config, 200, 77,
      [](std::size_t, const Snapshot& snap) {
        const auto r = rmst_difference(to_two_arm(snap, "control", "treatment"),
                                       TauPolicy::min_of_max_observed());
        return Out{r.estimate.point, r.tau_used};
      },
      1);
  double mean = 0.0;
  std::vector<double> taus;
  for (const auto& r : results) {
    mean += r.diff / results.size();
    taus.push_back(r.tau);
  }
  std::nth_element(taus.begin(), taus.begin() + taus.size() / 2, taus.end());
  const double tau = taus[taus.size() / 2];
  const auto ctl = config.control_hazard();
  const auto trt = config.treatment_hazard();
  const double truth = oracle::piecewise_rmst(trt, tau) - oracle::piecewise_rmst(ctl, tau);
  EXPECT_NEAR(mean, truth, 0.5);
}

TEST(InformationFraction, Examples) {
  EXPECT_NEAR(information_fraction(245, 370).fraction, 0.662, 5e-4);
  EXPECT_DOUBLE_EQ(information_fraction(0, 370).fraction, 0.0);
  EXPECT_DOUBLE_EQ(information_fraction(370, 370).fraction, 1.0);
  EXPECT_THROW(information_fraction(1, 0), InputError);
}

TEST(CensoringComparison, IdenticalArmsGiveIdenticalCurves) {
  Snapshot s;
  s.ccod = 20;
  for (const char* arm : {"a", "b"}) {
    s.patients.push_back({std::string(arm) + "1", arm, 0, 3, CensorReason::Event});
    s.patients.push_back({std::string(arm) + "2", arm, 0, 5, CensorReason::LostToFollowUp});
    s.patients.push_back({std::string(arm) + "3", arm, 2, 18, CensorReason::AdminCensored});
  }
  const auto c = censoring_comparison(s);
  ASSERT_EQ(c.curves.size(), 2u);
  ASSERT_EQ(c.curves[0].curve.knots.size(), c.curves[1].curve.knots.size());
  for (std::size_t i = 0; i < c.curves[0].curve.knots.size(); ++i) {
    EXPECT_EQ(c.curves[0].curve.knots[i].value, c.curves[1].curve.knots[i].value);
  }
}

TEST(CensoringComparison, ArmWithoutCensoringIsFlat) {
  Snapshot s;
  s.ccod = 20;
  s.patients = {{"1", "a", 0, 3, CensorReason::Event}, {"2", "a", 0, 4, CensorReason::Event},
                {"3", "b", 0, 5, CensorReason::AdminCensored}};
  const auto c = censoring_comparison(s);
  EXPECT_DOUBLE_EQ(c.curves[0].curve.at(10), 1.0);
}

TEST(CensoringComparison, SingleArmWarns) {
  Snapshot s;
  s.ccod = 20;
  s.patients = {{"1", "a", 0, 3, CensorReason::Event}};
  const auto c = censoring_comparison(s);
  EXPECT_EQ(c.curves.size(), 1u);
  EXPECT_TRUE(c.warning.has_value());
}

TEST(CensoringComparison, SimulatedArmsShareTheMechanism) {
  const auto config = SimConfig::delayed_separation();
  const auto p = map_replicates(
      config, 500, 5,
      [](std::size_t, const Snapshot& snap) {
        return censoring_logrank(snap, "control", "treatment").p;
      },
      1);
  const auto nonsignificant = std::count_if(p.begin(), p.end(), [](double v) { return v >= 0.05; });
  EXPECT_GE(nonsignificant, 450);
}
