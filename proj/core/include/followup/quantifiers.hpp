#pragma once

// The seven ways of quantifying follow-up found in the literature, each
// defined by how a patient's time and status are recoded before a
// distribution is summarised:
//
//   Q1 observation time, all patients, every time treated as an event
//   Q2 observation time of censored patients only
//   Q3 time to censoring: indicators flipped, reverse Kaplan-Meier
//   Q4 time to CCOD: ccod - entry for everybody
//   Q5 known function time: censored keep their time, events get ccod - entry
//   Q6 Korn's potential follow-up, pi(t) = G_pot(t) * S_ltfu(t)
//   Q7 potential follow-up considering events: events keep their time,
//      censored get ccod - entry
//
// Per patient Q1 <= Q7 <= Q4, so the medians are ordered the same way.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "followup/snapshot.hpp"
#include "followup/survival.hpp"

namespace followup {

enum class QuantifierId {
  ObservationTimeAll = 1,
  ObservationTimeCensored = 2,
  TimeToCensoring = 3,
  TimeToCcod = 4,
  KnownFunctionTime = 5,
  KornPotentialFollowUp = 6,
  PotentialFollowUpConsideringEvents = 7,
};

inline constexpr std::array<QuantifierId, 7> kAllQuantifiers = {
    QuantifierId::ObservationTimeAll,      QuantifierId::ObservationTimeCensored,
    QuantifierId::TimeToCensoring,         QuantifierId::TimeToCcod,
    QuantifierId::KnownFunctionTime,       QuantifierId::KornPotentialFollowUp,
    QuantifierId::PotentialFollowUpConsideringEvents,
};

std::string_view short_name(QuantifierId id);   // "q1" .. "q7"
std::string_view description(QuantifierId id);  // row label for tables
std::optional<QuantifierId> parse_quantifier(std::string_view token);

enum class Estimation { PlainEmpirical, ReverseKm, KornProduct };
std::string_view to_string(Estimation e);

// Quantiles are type-7 sample quantiles for plain empirical rows and curve
// quantiles otherwise; a curve quantile may be IntervalEstimate::kNotReached.
struct DistributionSummary {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct QuantifierResult {
  QuantifierId id = QuantifierId::ObservationTimeAll;
  ObservedSample derived;
  Estimation estimation = Estimation::PlainEmpirical;
  DistributionSummary summary;
  std::optional<StepCurve> curve;
  bool median_at_left_limit = false;  // Q6 only
};

struct KornFollowUp {
  // Right-continuous rendering of pi for plotting: the value at each knot is
  // pi(t+). Use at() for the exact function.
  StepCurve curve;
  StepCurve ltfu_curve;              // S_ltfu, LTFU as the event
  std::vector<double> potential;     // sorted ccod - entry
  double median = 0.0;
  // The infimum is approached from the right of the knot (pi drops just
  // after a potential follow-up time) rather than attained at it.
  bool median_at_left_limit = false;

  // pi(t) with G_pot(t) = fraction with potential follow-up >= t.
  double at(double t) const;
  double quantile_time(double level, bool* at_left_limit = nullptr) const;
};

QuantifierResult derive_quantifier(const Snapshot& snapshot, QuantifierId id,
                                   const std::optional<std::string>& arm = std::nullopt);

KornFollowUp korn_followup(const Snapshot& snapshot,
                           const std::optional<std::string>& arm = std::nullopt);

// median(Q1) / median(Q7).
double clark_c(const Snapshot& snapshot, const std::optional<std::string>& arm = std::nullopt);

struct LtfuReassignment {
  Snapshot snapshot;
  std::size_t relabeled = 0;
  std::optional<std::string> warning;
};

// Relabels round(fraction * #admin-censored) administratively censored
// patients, chosen uniformly without replacement, as lost to follow-up.
LtfuReassignment ltfu_reassign(const Snapshot& snapshot, double fraction, std::uint64_t seed);

struct QuantifierCell {
  std::optional<DistributionSummary> summary;
  std::string note;  // why the cell is empty, or the median convention used
};

// Rows are kAllQuantifiers, one column per group ("pooled" then each arm).
struct QuantifierSummary {
  std::string snapshot_label;
  std::vector<std::string> groups;
  std::vector<std::array<QuantifierCell, 7>> cells;  // cells[group][row]
};

QuantifierSummary summarize_all(const Snapshot& snapshot);

struct QuantifierDelta {
  std::optional<double> earlier;
  std::optional<double> later;
  std::optional<double> delta;
  std::optional<double> delta_percent;
};

struct QuantifierComparison {
  QuantifierSummary earlier;
  QuantifierSummary later;
  std::vector<std::string> groups;  // groups present in both
  std::vector<std::array<QuantifierDelta, 7>> medians;  // medians[group][row]
};

QuantifierComparison summarize_all(const Snapshot& earlier, const Snapshot& later);

}  // namespace followup
