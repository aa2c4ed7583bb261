#include "followup/stability.hpp"

#include <algorithm>

#include "followup/error.hpp"

namespace followup {

StabilityBounds betensky_bounds(std::span<const Observation> sample, double delta) {
  validate_sample(sample);
  if (!(delta >= 0.0)) throw InputError("delta must be >= 0");

  StabilityBounds out;
  out.delta = delta;
  out.observed = km_fit(sample);

  double last_event = -1.0;
  for (const auto& obs : sample) {
    if (obs.event) last_event = std::max(last_event, obs.time);
  }
  out.degenerate = last_event < 0.0;

  ObservedSample best(sample.begin(), sample.end());
  ObservedSample worst(sample.begin(), sample.end());
  for (std::size_t i = 0; i < best.size(); ++i) {
    if (best[i].event) continue;
    if (!out.degenerate) best[i].time = last_event;
    worst[i].time += delta;
    worst[i].event = true;
  }
  out.upper = km_fit(best);
  out.lower = km_fit(worst);
  out.horizon = out.lower.max_time;
  return out;
}

StabilityIndex stability_index(const StabilityBounds& bounds) {
  StabilityIndex out;
  out.horizon = bounds.horizon + bounds.delta;
  if (out.horizon <= 0.0) return out;
  const double gap = area_under(bounds.upper, out.horizon) - area_under(bounds.lower, out.horizon);
  out.value = std::clamp(gap / out.horizon, 0.0, 1.0);
  return out;
}

StabilityIndex stability_index(std::span<const Observation> sample, double delta) {
  return stability_index(betensky_bounds(sample, delta));
}

ExtremeRmstDifference cross_arm_extreme_rmst(const TwoArmSample& sample, double delta) {
  const auto ctl = betensky_bounds(sample.control, delta);
  const auto trt = betensky_bounds(sample.treatment, delta);
  if (ctl.degenerate || trt.degenerate) {
    throw ComputationError("extreme RMST difference needs at least one event per arm");
  }
  ExtremeRmstDifference out;
  out.horizon = std::min(ctl.horizon, trt.horizon);
  out.value = area_under(trt.upper, out.horizon) - area_under(ctl.lower, out.horizon);
  return out;
}

}  // namespace followup
