#pragma once

// Nonparametric estimation primitives for right-censored data: product-limit
// curves, Greenwood variances, log-log intervals, quantiles, milestones,
// restricted means, the reverse (censoring) curve, at-risk counts and ECDFs.
//
// Times are in months throughout. Ties between events and censorings at the
// same time are resolved events-first: censored subjects remain in the risk
// set at that event time.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace followup {

inline constexpr double kDaysPerMonth = 30.4375;

struct Observation {
  double time = 0.0;
  bool event = false;  // false: right-censored at time
};

using ObservedSample = std::vector<Observation>;

// Throws InputError unless every time is finite and >= 0 (and, when
// require_nonempty, the sample has at least one item).
void validate_sample(std::span<const Observation> sample, bool require_nonempty = true);

ObservedSample flip_indicators(std::span<const Observation> sample);

struct Knot {
  double time = 0.0;
  double value = 1.0;        // curve value on [time, next knot)
  double se = 0.0;           // Greenwood standard error (survival-type curves)
  std::size_t n_risk = 0;
  std::size_t n_event = 0;
  bool se_saturated = false;  // risk set exhausted; se is carried from the last computable knot
};

// Right-continuous step function.
struct StepCurve {
  double initial = 1.0;            // value before the first knot
  std::vector<Knot> knots;         // strictly increasing times
  std::vector<double> censor_times;  // sorted; ticks for plotting and risk-set bookkeeping
  std::size_t n_total = 0;
  double max_time = 0.0;           // largest observed time of the source sample

  // Index of the last knot with time <= t, if any.
  std::optional<std::size_t> knot_index(double t) const;
  double at(double t) const;
  // Left limit S(t-).
  double before(double t) const;
  // Subjects with observed time >= t.
  std::size_t n_risk_at(double t) const;
};

// Exact area under the step curve on [0, tau]; no range check.
double area_under(const StepCurve& curve, double tau);

struct IntervalEstimate {
  static constexpr double kNotReached = std::numeric_limits<double>::infinity();

  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::optional<double> se;
  bool degenerate = false;    // interval collapsed to the point (S in {0,1})
  bool saturated = false;     // Greenwood variance undefined at t
  bool extrapolated = false;  // t beyond the observed data

  bool reached() const { return point != kNotReached; }
};

StepCurve km_fit(std::span<const Observation> sample);

struct GreenwoodSe {
  double se = 0.0;
  bool saturated = false;
};

GreenwoodSe greenwood_se(const StepCurve& curve, double t);

// Complementary log-log interval for a survival probability with standard
// error se. Degenerate when surv is 0 or 1.
IntervalEstimate loglog_interval(double surv, double se, double level);

IntervalEstimate km_ci(const StepCurve& curve, double t, double level);

// Quantile inf{t : S(t) <= 1 - p} with a Brookmeyer-Crowley interval built
// by inverting the pointwise log-log band.
IntervalEstimate km_quantile(const StepCurve& curve, double p, double level);

struct MilestoneEstimate {
  IntervalEstimate estimate;
  std::size_t n_risk = 0;
};

MilestoneEstimate milestone_estimate(const StepCurve& curve, double t, double level);

// Restricted mean survival time on [0, tau] with the product-limit variance.
// Throws InputError when tau exceeds the largest observed time.
IntervalEstimate rmst(const StepCurve& curve, double tau, double level = 0.95);

StepCurve reverse_km(std::span<const Observation> sample);

std::vector<std::size_t> at_risk_table(std::span<const Observation> sample,
                                       std::span<const double> grid);

// Right-continuous empirical CDF (initial value 0).
StepCurve ecdf(std::span<const double> values);

}  // namespace followup
