#pragma once

// Extreme-scenario stability bounds for a KM curve. Events stay events in
// any later snapshot; each censored patient can at best stay event-free
// through the last observed event, and at worst have the event one day
// after censoring.

#include "followup/effects.hpp"
#include "followup/survival.hpp"

namespace followup {

inline constexpr double kOneDay = 1.0 / kDaysPerMonth;

struct StabilityBounds {
  StepCurve observed;
  StepCurve lower;  // worst case
  StepCurve upper;  // best case
  double horizon = 0.0;  // largest worst-case time
  double delta = kOneDay;
  bool degenerate = false;  // no events: upper stays at 1
};

StabilityBounds betensky_bounds(std::span<const Observation> sample, double delta = kOneDay);

struct StabilityIndex {
  double value = 0.0;
  // Integration horizon: the largest worst-case time plus delta, so a
  // worst-case event at the horizon itself still adds area.
  double horizon = 0.0;
};

StabilityIndex stability_index(const StabilityBounds& bounds);
StabilityIndex stability_index(std::span<const Observation> sample, double delta = kOneDay);

struct ExtremeRmstDifference {
  double value = 0.0;    // integral of upper_trt - lower_ctl on [0, horizon]
  double horizon = 0.0;  // min of the two arms' horizons
  // Always true: this is a deterministic extreme, not an estimate.
  bool extreme_deterministic_bound = true;
};

ExtremeRmstDifference cross_arm_extreme_rmst(const TwoArmSample& sample, double delta = kOneDay);

}  // namespace followup
