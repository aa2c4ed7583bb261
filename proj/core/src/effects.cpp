#include "followup/effects.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "followup/error.hpp"
#include "followup/stats.hpp"

namespace followup {
namespace {

// Risk-set counts at one distinct event time; arm 0 = control, 1 = treatment.
struct EventGroup {
  double time = 0.0;
  double n0 = 0.0;
  double n1 = 0.0;
  double d0 = 0.0;
  double d1 = 0.0;
  double pooled_surv_before = 1.0;  // pooled KM S(t-)

  double n() const { return n0 + n1; }
  double d() const { return d0 + d1; }
};

std::vector<EventGroup> event_groups(const TwoArmSample& sample) {
  validate_sample(sample.control, false);
  validate_sample(sample.treatment, false);

  struct Item {
    double time;
    bool event;
    bool treated;
  };
  std::vector<Item> items;
  items.reserve(sample.control.size() + sample.treatment.size());
  for (const auto& o : sample.control) items.push_back({o.time, o.event, false});
  for (const auto& o : sample.treatment) items.push_back({o.time, o.event, true});
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.time < b.time; });

  std::vector<EventGroup> groups;
  double n0 = static_cast<double>(sample.control.size());
  double n1 = static_cast<double>(sample.treatment.size());
  double surv = 1.0;
  std::size_t i = 0;
  while (i < items.size()) {
    const double t = items[i].time;
    EventGroup g{t, n0, n1, 0.0, 0.0, surv};
    double leaving0 = 0.0;
    double leaving1 = 0.0;
    for (; i < items.size() && items[i].time == t; ++i) {
      if (items[i].treated) {
        leaving1 += 1.0;
        if (items[i].event) g.d1 += 1.0;
      } else {
        leaving0 += 1.0;
        if (items[i].event) g.d0 += 1.0;
      }
    }
    if (g.d() > 0.0) {
      surv *= 1.0 - g.d() / g.n();
      groups.push_back(g);
    }
    n0 -= leaving0;
    n1 -= leaving1;
  }
  return groups;
}

CoxScore efron_terms(const std::vector<EventGroup>& groups, double beta) {
  const double theta = std::exp(beta);
  CoxScore s;
  for (const auto& g : groups) {
    const double d = g.d();
    s.loglik += g.d1 * beta;
    s.score += g.d1;
    const auto ties = static_cast<int>(d);
    for (int j = 0; j < ties; ++j) {
      const double f = j / d;
      const double a = (g.n1 - f * g.d1) * theta;
      const double denom = a + (g.n0 - f * g.d0);
      const double m = a / denom;
      s.loglik -= std::log(denom);
      s.score -= m;
      s.information += m * (1.0 - m);
    }
  }
  return s;
}

// Efron-averaged expected treatment indicator among the d tied events.
double efron_mean(const EventGroup& g, double theta) {
  const double d = g.d();
  const auto ties = static_cast<int>(d);
  double sum = 0.0;
  for (int j = 0; j < ties; ++j) {
    const double f = j / d;
    const double a = (g.n1 - f * g.d1) * theta;
    sum += a / (a + (g.n0 - f * g.d0));
  }
  return sum / d;
}

}  // namespace

TwoArmSample to_two_arm(const Snapshot& snapshot, const std::string& control,
                        const std::string& treatment) {
  if (control == treatment) throw InputError("control and treatment arms must differ");
  TwoArmSample out;
  out.control = snapshot.observed(control);
  out.treatment = snapshot.observed(treatment);
  out.control_label = control;
  out.treatment_label = treatment;
  return out;
}

LogrankResult logrank(const TwoArmSample& sample, LogrankWeights weights) {
  if (weights.rho < 0.0 || weights.gamma < 0.0) {
    throw InputError("Fleming-Harrington weights must be >= 0");
  }
  const auto groups = event_groups(sample);
  if (groups.empty()) throw ComputationError("logrank: no events in either arm");

  LogrankResult out;
  out.event_times = groups.size();
  for (const auto& g : groups) {
    const double n = g.n();
    const double d = g.d();
    const double expected = d * g.n1 / n;
    const double var =
        n > 1.0 ? d * (g.n1 / n) * (1.0 - g.n1 / n) * (n - d) / (n - 1.0) : 0.0;
    double w = 1.0;
    if (weights.rho != 0.0) w *= std::pow(g.pooled_surv_before, weights.rho);
    if (weights.gamma != 0.0) w *= std::pow(1.0 - g.pooled_surv_before, weights.gamma);
    out.o_minus_e += w * (g.d1 - expected);
    out.variance += w * w * var;
  }
  if (out.variance > 0.0) {
    out.z = out.o_minus_e / std::sqrt(out.variance);
    out.chi2 = out.z * out.z;
    out.p = stats::two_sided_p(out.z);
  }
  return out;
}

CoxScore cox_score(const TwoArmSample& sample, double log_hr) {
  return efron_terms(event_groups(sample), log_hr);
}

CoxResult cox_two_group(const TwoArmSample& sample, const CoxOptions& options) {
  const auto groups = event_groups(sample);
  if (groups.empty()) throw ComputationError("Cox model: no events in either arm");

  // The score is decreasing in beta. Its limits at +-inf decide whether a
  // finite root exists: as theta -> inf each tied term tends to 1 whenever
  // treatment patients are at risk, as theta -> 0 it tends to 1 only when
  // no control patients are at risk.
  double d1_total = 0.0;
  double limit_pos = 0.0;
  double limit_neg = 0.0;
  for (const auto& g : groups) {
    d1_total += g.d1;
    if (g.n1 > 0.0) limit_pos += g.d();
    if (g.n0 == 0.0) limit_neg += g.d();
  }
  if (d1_total - limit_pos >= 0.0) throw MonotoneLikelihood(+1);
  if (d1_total - limit_neg <= 0.0) throw MonotoneLikelihood(-1);

  constexpr double kMaxStep = 2.0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double beta = 0.0;
  CoxResult out;
  CoxScore s = efron_terms(groups, beta);
  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    if (std::fabs(s.score) < options.tolerance) {
      out.converged = true;
      break;
    }
    if (s.score > 0.0) {
      lo = beta;
    } else {
      hi = beta;
    }
    double next = beta + std::clamp(s.score / s.information, -kMaxStep, kMaxStep);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    beta = next;
    s = efron_terms(groups, beta);
  }
  if (!out.converged && std::fabs(s.score) < options.tolerance) out.converged = true;

  out.log_hr = beta;
  out.score = s.score;
  out.se = 1.0 / std::sqrt(s.information);
  const double z = stats::two_sided_z(options.level);
  out.hr_ci.point = std::exp(beta);
  out.hr_ci.lower = std::exp(beta - z * out.se);
  out.hr_ci.upper = std::exp(beta + z * out.se);
  out.hr_ci.level = options.level;
  out.hr_ci.se = out.se;
  out.wald_p = stats::two_sided_p(beta / out.se);
  return out;
}

PhTestResult schoenfeld_ph_test(const TwoArmSample& sample, const CoxResult& fit,
                                TimeTransform transform) {
  if (!fit.converged) throw ComputationError("PH test: Cox fit did not converge");
  const auto groups = event_groups(sample);
  double events = 0.0;
  for (const auto& g : groups) events += g.d();
  if (events < 2.0) throw ComputationError("PH test: needs at least 2 events");

  const double theta = std::exp(fit.log_hr);
  std::vector<double> g_time;
  g_time.reserve(groups.size());
  double g_mean = 0.0;
  for (const auto& g : groups) {
    const double v =
        transform == TimeTransform::Identity ? g.time : 1.0 - g.pooled_surv_before;
    g_time.push_back(v);
    g_mean += g.d() * v;
  }
  g_mean /= events;

  // Sums over events; tied events share the transformed time.
  double cross = 0.0;
  double g_ss = 0.0;
  double r_ss = 0.0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const auto& g = groups[k];
    const double xbar = efron_mean(g, theta);
    const double centered = g_time[k] - g_mean;
    cross += centered * (g.d1 - g.d() * xbar);
    g_ss += g.d() * centered * centered;
    r_ss += g.d1 * (1.0 - xbar) * (1.0 - xbar) + g.d0 * xbar * xbar;
  }

  PhTestResult out;
  out.transform = transform;
  const double variance = fit.se * fit.se;
  if (g_ss > 0.0) {
    out.chi2 = events * variance * cross * cross / g_ss;
    out.p = stats::chi2_1df_p(out.chi2);
  }
  if (g_ss > 0.0 && r_ss > 0.0) out.correlation = cross / std::sqrt(g_ss * r_ss);
  return out;
}

IntervalEstimate difference_interval(double s_trt, double se_trt, double s_ctl, double se_ctl,
                                     double level) {
  IntervalEstimate out;
  out.level = level;
  out.point = s_trt - s_ctl;
  out.se = std::sqrt(se_trt * se_trt + se_ctl * se_ctl);
  const double half = stats::two_sided_z(level) * *out.se;
  out.lower = std::max(-1.0, out.point - half);
  out.upper = std::min(1.0, out.point + half);
  out.degenerate = *out.se == 0.0;
  return out;
}

IntervalEstimate milestone_difference(const TwoArmSample& sample, double t, double level) {
  if (!(t >= 0.0)) throw InputError("milestone time must be >= 0");
  const auto ctl = km_fit(sample.control);
  const auto trt = km_fit(sample.treatment);
  const auto gc = greenwood_se(ctl, t);
  const auto gt = greenwood_se(trt, t);
  auto out = difference_interval(trt.at(t), gt.se, ctl.at(t), gc.se, level);
  out.saturated = gc.saturated || gt.saturated;
  out.extrapolated = t > ctl.max_time || t > trt.max_time;
  return out;
}

double RmstDifference::information() const {
  const double se = estimate.se.value_or(0.0);
  return se > 0.0 ? 1.0 / (se * se) : std::numeric_limits<double>::infinity();
}

RmstDifference rmst_difference(const TwoArmSample& sample, TauPolicy policy, double level) {
  const auto ctl = km_fit(sample.control);
  const auto trt = km_fit(sample.treatment);
  const double admissible = std::min(ctl.max_time, trt.max_time);

  RmstDifference out;
  if (policy.kind == TauPolicy::Kind::FixedTau) {
    if (!(policy.tau >= 0.0) || policy.tau > admissible) {
      throw InputError("restriction time " + std::to_string(policy.tau) +
                       " outside the admissible range [0, " + std::to_string(admissible) + "]");
    }
    out.tau_used = policy.tau;
    out.tau_rule = "fixed";
  } else {
    out.tau_used = admissible;
    out.tau_rule = "min-of-max-observed";
  }

  out.control = rmst(ctl, out.tau_used, level);
  out.treatment = rmst(trt, out.tau_used, level);
  const double diff = out.treatment.point - out.control.point;
  const double se_c = out.control.se.value_or(0.0);
  const double se_t = out.treatment.se.value_or(0.0);
  const double se = std::sqrt(se_c * se_c + se_t * se_t);
  const double half = stats::two_sided_z(level) * se;
  out.estimate.point = diff;
  out.estimate.se = se;
  out.estimate.level = level;
  out.estimate.lower = diff - half;
  out.estimate.upper = diff + half;
  out.estimate.degenerate = se == 0.0;
  out.p = se > 0.0 ? stats::two_sided_p(diff / se) : 1.0;
  return out;
}

InformationFraction information_fraction(std::size_t d_int, std::size_t d_fin) {
  if (d_fin == 0) throw InputError("planned final event count must be > 0");
  return {d_int, d_fin, static_cast<double>(d_int) / static_cast<double>(d_fin)};
}

CensoringComparison censoring_comparison(const Snapshot& snapshot, bool split_by_reason) {
  CensoringComparison out;
  const auto arms = snapshot.arms();
  if (arms.empty()) throw InputError("snapshot has no patients");
  if (arms.size() < 2) out.warning = "single-arm snapshot: no between-arm comparison";

  for (const auto& arm : arms) {
    const auto patients = snapshot.select(arm);
    ObservedSample any;
    ObservedSample admin;
    ObservedSample ltfu;
    for (const auto& p : patients) {
      any.push_back({p.time, p.is_censored()});
      admin.push_back({p.time, p.reason == CensorReason::AdminCensored});
      ltfu.push_back({p.time, p.reason == CensorReason::LostToFollowUp});
    }
    out.curves.push_back({arm, "any", km_fit(any)});
    if (split_by_reason) {
      out.curves.push_back({arm, "admin", km_fit(admin)});
      out.curves.push_back({arm, "ltfu", km_fit(ltfu)});
    }
  }
  return out;
}

LogrankResult censoring_logrank(const Snapshot& snapshot, const std::string& control,
                                const std::string& treatment) {
  auto sample = to_two_arm(snapshot, control, treatment);
  sample.control = flip_indicators(sample.control);
  sample.treatment = flip_indicators(sample.treatment);
  return logrank(sample);
}

}  // namespace followup
