#pragma once

// Two-group effect quantification: (weighted) logrank, the two-group Cox
// model with Efron ties, the Grambsch-Therneau PH test, milestone and RMST
// differences, information fraction and per-arm censoring curves.
//
// Signed quantities (O - E, log HR, differences) are reported for the
// treatment arm relative to control.

#include <optional>
#include <string>
#include <vector>

#include "followup/snapshot.hpp"
#include "followup/survival.hpp"

namespace followup {

struct TwoArmSample {
  ObservedSample control;
  ObservedSample treatment;
  std::string control_label = "control";
  std::string treatment_label = "treatment";

  TwoArmSample swapped() const { return {treatment, control, treatment_label, control_label}; }
};

TwoArmSample to_two_arm(const Snapshot& snapshot, const std::string& control,
                        const std::string& treatment);

// Fleming-Harrington G(rho, gamma) weights S(t-)^rho * (1 - S(t-))^gamma
// from the pooled KM.
struct LogrankWeights {
  double rho = 0.0;
  double gamma = 0.0;
};

struct LogrankResult {
  double z = 0.0;
  double chi2 = 0.0;
  double p = 1.0;
  double o_minus_e = 0.0;  // weighted, treatment arm
  double variance = 0.0;   // weighted
  std::size_t event_times = 0;
};

LogrankResult logrank(const TwoArmSample& sample, LogrankWeights weights = {});

struct CoxOptions {
  double tolerance = 1e-8;  // on |score|
  int max_iterations = 50;
  double level = 0.95;
};

struct CoxResult {
  double log_hr = 0.0;
  double se = 0.0;
  IntervalEstimate hr_ci;  // point = exp(log_hr)
  double wald_p = 1.0;
  double score = 0.0;      // at log_hr
  int iterations = 0;
  bool converged = false;
};

// Throws MonotoneLikelihood when the partial likelihood has no finite
// maximizer and ComputationError when there are no events.
CoxResult cox_two_group(const TwoArmSample& sample, const CoxOptions& options = {});

// Efron-weighted score and information of the two-group partial likelihood
// at log_hr, exposed for diagnostics and tests.
struct CoxScore {
  double loglik = 0.0;
  double score = 0.0;
  double information = 0.0;
};
CoxScore cox_score(const TwoArmSample& sample, double log_hr);

enum class TimeTransform { Identity, KaplanMeier };

struct PhTestResult {
  double chi2 = 0.0;
  double p = 1.0;
  double correlation = 0.0;  // between transformed time and scaled residuals
  TimeTransform transform = TimeTransform::Identity;
};

PhTestResult schoenfeld_ph_test(const TwoArmSample& sample, const CoxResult& fit,
                                TimeTransform transform = TimeTransform::Identity);

// S_trt(t) - S_ctl(t) with an untransformed normal interval clipped to [-1, 1].
IntervalEstimate difference_interval(double s_trt, double se_trt, double s_ctl, double se_ctl,
                                     double level = 0.95);
IntervalEstimate milestone_difference(const TwoArmSample& sample, double t, double level = 0.95);

struct TauPolicy {
  enum class Kind { FixedTau, MinOfMaxObserved };
  Kind kind = Kind::MinOfMaxObserved;
  double tau = 0.0;  // FixedTau only

  static TauPolicy fixed(double tau) { return {Kind::FixedTau, tau}; }
  static TauPolicy min_of_max_observed() { return {}; }
};

struct RmstDifference {
  IntervalEstimate estimate;  // RMST_trt - RMST_ctl
  double p = 1.0;
  double tau_used = 0.0;
  std::string tau_rule;       // "fixed" | "min-of-max-observed"
  IntervalEstimate control;
  IntervalEstimate treatment;
  // 1 / Var(difference); infinite when the variance is zero.
  double information() const;
};

RmstDifference rmst_difference(const TwoArmSample& sample, TauPolicy policy, double level = 0.95);

struct InformationFraction {
  std::size_t d_int = 0;
  std::size_t d_fin = 0;
  double fraction = 0.0;
};

InformationFraction information_fraction(std::size_t d_int, std::size_t d_fin);

struct CensoringCurve {
  std::string arm;
  std::string reason;  // "any", "admin" or "ltfu": which censorings count as the event
  StepCurve curve;
};

struct CensoringComparison {
  std::vector<CensoringCurve> curves;
  std::optional<std::string> warning;
};

CensoringComparison censoring_comparison(const Snapshot& snapshot, bool split_by_reason = false);

// Logrank comparison of the two arms' reverse-KM censoring distributions.
LogrankResult censoring_logrank(const Snapshot& snapshot, const std::string& control,
                                const std::string& treatment);

}  // namespace followup
