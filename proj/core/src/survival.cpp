#include "followup/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "followup/error.hpp"
#include "followup/stats.hpp"

namespace followup {
namespace {

// Relative slack when comparing a curve value to a probability threshold;
// products like 3/4 * 2/3 do not land exactly on 1/2.
constexpr double kProbEps = 1e-12;

}  // namespace

void validate_sample(std::span<const Observation> sample, bool require_nonempty) {
  if (require_nonempty && sample.empty()) throw InputError("sample is empty");
  for (const auto& obs : sample) {
    if (!std::isfinite(obs.time) || obs.time < 0.0) {
      throw InputError("observation time must be finite and >= 0, got " +
                       std::to_string(obs.time));
    }
  }
}

ObservedSample flip_indicators(std::span<const Observation> sample) {
  ObservedSample out(sample.begin(), sample.end());
  for (auto& obs : out) obs.event = !obs.event;
  return out;
}

std::optional<std::size_t> StepCurve::knot_index(double t) const {
  auto it = std::upper_bound(knots.begin(), knots.end(), t,
                             [](double v, const Knot& k) { return v < k.time; });
  if (it == knots.begin()) return std::nullopt;
  return static_cast<std::size_t>(it - knots.begin()) - 1;
}

double StepCurve::at(double t) const {
  const auto idx = knot_index(t);
  return idx ? knots[*idx].value : initial;
}

double StepCurve::before(double t) const {
  auto it = std::lower_bound(knots.begin(), knots.end(), t,
                             [](const Knot& k, double v) { return k.time < v; });
  if (it == knots.begin()) return initial;
  return std::prev(it)->value;
}

std::size_t StepCurve::n_risk_at(double t) const {
  std::size_t gone = 0;
  for (const auto& k : knots) {
    if (k.time >= t) break;
    gone += k.n_event;
  }
  gone += static_cast<std::size_t>(
      std::lower_bound(censor_times.begin(), censor_times.end(), t) - censor_times.begin());
  return gone >= n_total ? 0 : n_total - gone;
}

double area_under(const StepCurve& curve, double tau) {
  double area = 0.0;
  double prev_t = 0.0;
  double value = curve.initial;
  for (const auto& k : curve.knots) {
    if (k.time >= tau) break;
    area += value * (k.time - prev_t);
    prev_t = k.time;
    value = k.value;
  }
  if (tau > prev_t) area += value * (tau - prev_t);
  return area;
}

StepCurve km_fit(std::span<const Observation> sample) {
  validate_sample(sample);

  std::vector<Observation> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end(), [](const Observation& a, const Observation& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.event && !b.event;
  });

  StepCurve curve;
  curve.initial = 1.0;
  curve.n_total = sorted.size();
  curve.max_time = sorted.back().time;

  double surv = 1.0;
  double greenwood = 0.0;
  double last_se = 0.0;
  std::size_t at_risk = sorted.size();
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double t = sorted[i].time;
    std::size_t events = 0;
    std::size_t censored = 0;
    for (; i < sorted.size() && sorted[i].time == t; ++i) {
      if (sorted[i].event) {
        ++events;
      } else {
        ++censored;
        curve.censor_times.push_back(t);
      }
    }
    if (events > 0) {
      const auto n = static_cast<double>(at_risk);
      const auto d = static_cast<double>(events);
      surv *= 1.0 - d / n;
      Knot knot{t, surv, last_se, at_risk, events, false};
      if (at_risk > events) {
        greenwood += d / (n * (n - d));
        knot.se = surv * std::sqrt(greenwood);
        last_se = knot.se;
      } else {
        knot.se_saturated = true;
      }
      curve.knots.push_back(knot);
    }
    at_risk -= events + censored;
  }
  return curve;
}

GreenwoodSe greenwood_se(const StepCurve& curve, double t) {
  const auto idx = curve.knot_index(t);
  if (!idx) return {};
  const auto& k = curve.knots[*idx];
  return {k.se, k.se_saturated};
}

IntervalEstimate loglog_interval(double surv, double se, double level) {
  IntervalEstimate out;
  out.point = surv;
  out.level = level;
  out.se = se;
  const double z = stats::two_sided_z(level);
  if (surv <= 0.0 || surv >= 1.0 || !(se > 0.0)) {
    out.lower = out.upper = surv;
    out.degenerate = true;
    return out;
  }
  const double log_surv = std::log(surv);
  const double theta = std::log(-log_surv);
  const double half = z * se / (surv * std::fabs(log_surv));
  out.lower = std::exp(-std::exp(theta + half));
  out.upper = std::exp(-std::exp(theta - half));
  return out;
}

IntervalEstimate km_ci(const StepCurve& curve, double t, double level) {
  const auto gw = greenwood_se(curve, t);
  auto out = loglog_interval(curve.at(t), gw.se, level);
  out.saturated = gw.saturated;
  return out;
}

IntervalEstimate km_quantile(const StepCurve& curve, double p, double level) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("quantile probability must lie in (0, 1)");
  const double target = 1.0 - p;
  const double slack = kProbEps * std::max(1.0, target);

  IntervalEstimate out;
  out.level = level;
  out.point = out.lower = out.upper = IntervalEstimate::kNotReached;
  bool have_point = false;
  bool have_lower = false;
  bool have_upper = false;
  for (const auto& k : curve.knots) {
    const auto ci = loglog_interval(k.value, k.se, level);
    if (!have_point && k.value <= target + slack) {
      out.point = k.time;
      have_point = true;
    }
    if (!have_lower && ci.lower <= target + slack) {
      out.lower = k.time;
      have_lower = true;
    }
    if (!have_upper && ci.upper < target - slack) {
      out.upper = k.time;
      have_upper = true;
    }
    if (have_point && have_lower && have_upper) break;
  }
  return out;
}

MilestoneEstimate milestone_estimate(const StepCurve& curve, double t, double level) {
  if (!(t >= 0.0)) throw InputError("milestone time must be >= 0");
  MilestoneEstimate out;
  out.estimate = km_ci(curve, t, level);
  out.estimate.extrapolated = t > curve.max_time;
  out.n_risk = curve.n_risk_at(t);
  return out;
}

IntervalEstimate rmst(const StepCurve& curve, double tau, double level) {
  if (!(tau >= 0.0)) throw InputError("restriction time must be >= 0");
  if (tau > curve.max_time) {
    throw InputError("restriction time " + std::to_string(tau) +
                     " exceeds the maximal admissible tau " + std::to_string(curve.max_time));
  }
  const double total = area_under(curve, tau);

  // Area accumulated up to each knot, to get the tail integral from t_i to tau.
  double variance = 0.0;
  double area = 0.0;
  double prev_t = 0.0;
  double value = curve.initial;
  for (const auto& k : curve.knots) {
    if (k.time > tau) break;
    area += value * (k.time - prev_t);
    prev_t = k.time;
    value = k.value;
    if (k.n_risk > k.n_event) {
      const double tail = total - area;
      const auto n = static_cast<double>(k.n_risk);
      const auto d = static_cast<double>(k.n_event);
      variance += tail * tail * d / (n * (n - d));
    }
  }

  IntervalEstimate out;
  out.point = total;
  out.level = level;
  out.se = std::sqrt(variance);
  const double half = stats::two_sided_z(level) * *out.se;
  out.lower = total - half;
  out.upper = total + half;
  out.degenerate = variance == 0.0;
  return out;
}

StepCurve reverse_km(std::span<const Observation> sample) {
  const auto flipped = flip_indicators(sample);
  return km_fit(flipped);
}

std::vector<std::size_t> at_risk_table(std::span<const Observation> sample,
                                       std::span<const double> grid) {
  std::vector<double> times;
  times.reserve(sample.size());
  for (const auto& obs : sample) times.push_back(obs.time);
  std::sort(times.begin(), times.end());
  std::vector<std::size_t> counts;
  counts.reserve(grid.size());
  for (double t : grid) {
    counts.push_back(static_cast<std::size_t>(
        times.end() - std::lower_bound(times.begin(), times.end(), t)));
  }
  return counts;
}

StepCurve ecdf(std::span<const double> values) {
  if (values.empty()) throw InputError("ecdf of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  StepCurve curve;
  curve.initial = 0.0;
  curve.n_total = sorted.size();
  curve.max_time = sorted.back();
  const auto n = static_cast<double>(sorted.size());
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double v = sorted[i];
    const std::size_t start = i;
    while (i < sorted.size() && sorted[i] == v) ++i;
    Knot knot;
    knot.time = v;
    knot.value = static_cast<double>(i) / n;
    knot.n_risk = sorted.size() - start;
    knot.n_event = i - start;
    curve.knots.push_back(knot);
  }
  return curve;
}

}  // namespace followup
