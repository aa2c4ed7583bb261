#include "followup/quantifiers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "followup/error.hpp"
#include "followup/stats.hpp"

namespace followup {
namespace {

constexpr double kLevel = 0.95;

DistributionSummary plain_summary(const ObservedSample& derived) {
  std::vector<double> times;
  times.reserve(derived.size());
  for (const auto& obs : derived) times.push_back(obs.time);
  DistributionSummary s;
  s.median = stats::sample_quantile(times, 0.5);
  s.q25 = stats::sample_quantile(times, 0.25);
  s.q75 = stats::sample_quantile(times, 0.75);
  auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

void fill_range(DistributionSummary& s, const ObservedSample& derived) {
  auto [lo, hi] = std::minmax_element(
      derived.begin(), derived.end(),
      [](const Observation& a, const Observation& b) { return a.time < b.time; });
  s.min = lo->time;
  s.max = hi->time;
}

ObservedSample recode(const std::vector<PatientRecord>& patients, double ccod, QuantifierId id) {
  ObservedSample out;
  out.reserve(patients.size());
  for (const auto& p : patients) {
    const double potential = ccod - p.entry;
    switch (id) {
      case QuantifierId::ObservationTimeAll:
        out.push_back({p.time, true});
        break;
      case QuantifierId::ObservationTimeCensored:
        if (p.is_censored()) out.push_back({p.time, true});
        break;
      case QuantifierId::TimeToCensoring:
        out.push_back({p.time, p.is_censored()});
        break;
      case QuantifierId::TimeToCcod:
        out.push_back({potential, true});
        break;
      case QuantifierId::KnownFunctionTime:
        out.push_back({p.is_censored() ? p.time : potential, true});
        break;
      case QuantifierId::KornPotentialFollowUp:
        out.push_back({p.time, p.reason == CensorReason::LostToFollowUp});
        break;
      case QuantifierId::PotentialFollowUpConsideringEvents:
        out.push_back({p.is_event() ? p.time : potential, true});
        break;
    }
  }
  return out;
}

}  // namespace

std::string_view short_name(QuantifierId id) {
  static constexpr std::array<std::string_view, 7> names = {"q1", "q2", "q3", "q4",
                                                            "q5", "q6", "q7"};
  return names[static_cast<int>(id) - 1];
}

std::string_view description(QuantifierId id) {
  switch (id) {
    case QuantifierId::ObservationTimeAll:
      return "Observation time, all patients";
    case QuantifierId::ObservationTimeCensored:
      return "Observation time, censored patients";
    case QuantifierId::TimeToCensoring:
      return "Time to censoring (reverse KM)";
    case QuantifierId::TimeToCcod:
      return "Time to CCOD";
    case QuantifierId::KnownFunctionTime:
      return "Known function time";
    case QuantifierId::KornPotentialFollowUp:
      return "Korn potential follow-up";
    case QuantifierId::PotentialFollowUpConsideringEvents:
      return "Potential follow-up considering events";
  }
  return "";
}

std::optional<QuantifierId> parse_quantifier(std::string_view token) {
  for (auto id : kAllQuantifiers) {
    if (token == short_name(id)) return id;
  }
  return std::nullopt;
}

std::string_view to_string(Estimation e) {
  switch (e) {
    case Estimation::PlainEmpirical:
      return "plain-empirical";
    case Estimation::ReverseKm:
      return "reverse-km";
    case Estimation::KornProduct:
      return "korn-product";
  }
  return "";
}

double KornFollowUp::at(double t) const {
  if (potential.empty()) return 0.0;
  const auto eligible = static_cast<double>(
      potential.end() - std::lower_bound(potential.begin(), potential.end(), t));
  return eligible / static_cast<double>(potential.size()) * ltfu_curve.at(t);
}

double KornFollowUp::quantile_time(double level, bool* at_left_limit) const {
  std::vector<double> candidates = potential;
  candidates.push_back(0.0);
  for (const auto& k : ltfu_curve.knots) candidates.push_back(k.time);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const auto n = static_cast<double>(potential.size());
  for (double c : candidates) {
    if (at(c) < level) {
      if (at_left_limit) *at_left_limit = false;
      return c;
    }
    const auto beyond = static_cast<double>(
        potential.end() - std::upper_bound(potential.begin(), potential.end(), c));
    if (beyond / n * ltfu_curve.at(c) < level) {
      if (at_left_limit) *at_left_limit = true;
      return c;
    }
  }
  if (at_left_limit) *at_left_limit = false;
  return IntervalEstimate::kNotReached;
}

KornFollowUp korn_followup(const Snapshot& snapshot, const std::optional<std::string>& arm) {
  const auto patients = snapshot.select(arm);
  if (patients.empty()) throw InputError("snapshot has no patients");

  KornFollowUp out;
  out.ltfu_curve = km_fit(recode(patients, snapshot.ccod, QuantifierId::KornPotentialFollowUp));
  for (const auto& p : patients) out.potential.push_back(snapshot.ccod - p.entry);
  std::sort(out.potential.begin(), out.potential.end());

  std::vector<double> jumps = out.potential;
  for (const auto& k : out.ltfu_curve.knots) jumps.push_back(k.time);
  std::sort(jumps.begin(), jumps.end());
  jumps.erase(std::unique(jumps.begin(), jumps.end()), jumps.end());

  const auto n = static_cast<double>(out.potential.size());
  out.curve.initial = 1.0;
  out.curve.n_total = patients.size();
  out.curve.max_time = out.potential.back();
  double prev = 1.0;
  for (double t : jumps) {
    const auto beyond = static_cast<std::size_t>(
        out.potential.end() - std::upper_bound(out.potential.begin(), out.potential.end(), t));
    const double value = static_cast<double>(beyond) / n * out.ltfu_curve.at(t);
    if (value == prev) continue;
    Knot knot;
    knot.time = t;
    knot.value = value;
    knot.n_risk = beyond;
    out.curve.knots.push_back(knot);
    prev = value;
  }
  out.median = out.quantile_time(0.5, &out.median_at_left_limit);
  return out;
}

QuantifierResult derive_quantifier(const Snapshot& snapshot, QuantifierId id,
                                   const std::optional<std::string>& arm) {
  const auto patients = snapshot.select(arm);
  if (patients.empty()) throw InputError("snapshot has no patients");

  QuantifierResult out;
  out.id = id;
  out.derived = recode(patients, snapshot.ccod, id);
  if (out.derived.empty()) {
    throw ComputationError(std::string(short_name(id)) + ": no censored patients in the subset");
  }

  switch (id) {
    case QuantifierId::TimeToCensoring: {
      out.estimation = Estimation::ReverseKm;
      // derived already carries flipped indicators, so this is the reverse KM
      auto curve = km_fit(out.derived);
      out.summary.median = km_quantile(curve, 0.5, kLevel).point;
      out.summary.q25 = km_quantile(curve, 0.25, kLevel).point;
      out.summary.q75 = km_quantile(curve, 0.75, kLevel).point;
      fill_range(out.summary, out.derived);
      out.curve = std::move(curve);
      break;
    }
    case QuantifierId::KornPotentialFollowUp: {
      out.estimation = Estimation::KornProduct;
      auto korn = korn_followup(snapshot, arm);
      out.summary.median = korn.median;
      out.summary.q25 = korn.quantile_time(0.75);
      out.summary.q75 = korn.quantile_time(0.25);
      out.summary.min = korn.potential.front();
      out.summary.max = korn.potential.back();
      out.median_at_left_limit = korn.median_at_left_limit;
      out.curve = std::move(korn.curve);
      break;
    }
    default:
      out.estimation = Estimation::PlainEmpirical;
      out.summary = plain_summary(out.derived);
      break;
  }
  return out;
}

double clark_c(const Snapshot& snapshot, const std::optional<std::string>& arm) {
  const double observed =
      derive_quantifier(snapshot, QuantifierId::ObservationTimeAll, arm).summary.median;
  const double potential =
      derive_quantifier(snapshot, QuantifierId::PotentialFollowUpConsideringEvents, arm)
          .summary.median;
  if (!(potential > 0.0)) {
    throw ComputationError("Clark's C undefined: median potential follow-up is zero");
  }
  return observed / potential;
}

LtfuReassignment ltfu_reassign(const Snapshot& snapshot, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InputError("LTFU reassignment fraction must lie in (0, 1)");
  }
  LtfuReassignment out;
  out.snapshot = snapshot;

  std::vector<std::size_t> admin;
  for (std::size_t i = 0; i < snapshot.patients.size(); ++i) {
    if (snapshot.patients[i].reason == CensorReason::AdminCensored) admin.push_back(i);
  }
  if (admin.empty()) {
    out.warning = "no administratively censored patients; snapshot unchanged";
    return out;
  }
  const auto count = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(admin.size())));

  std::vector<std::size_t> chosen;
  std::mt19937_64 rng(seed);
  std::sample(admin.begin(), admin.end(), std::back_inserter(chosen), count, rng);
  for (auto i : chosen) out.snapshot.patients[i].reason = CensorReason::LostToFollowUp;
  out.relabeled = chosen.size();
  return out;
}

QuantifierSummary summarize_all(const Snapshot& snapshot) {
  QuantifierSummary out;
  out.snapshot_label = snapshot.label;
  out.groups.push_back("pooled");
  for (auto& arm : snapshot.arms()) out.groups.push_back(arm);

  for (std::size_t g = 0; g < out.groups.size(); ++g) {
    std::optional<std::string> arm;
    if (g > 0) arm = out.groups[g];
    std::array<QuantifierCell, 7> row;
    for (std::size_t q = 0; q < kAllQuantifiers.size(); ++q) {
      try {
        auto result = derive_quantifier(snapshot, kAllQuantifiers[q], arm);
        row[q].summary = result.summary;
        if (result.median_at_left_limit) row[q].note = "median attained at left limit";
      } catch (const ComputationError& e) {
        row[q].note = e.what();
      }
    }
    out.cells.push_back(std::move(row));
  }
  return out;
}

QuantifierComparison summarize_all(const Snapshot& earlier, const Snapshot& later) {
  QuantifierComparison out;
  out.earlier = summarize_all(earlier);
  out.later = summarize_all(later);
  for (std::size_t g = 0; g < out.earlier.groups.size(); ++g) {
    const auto& name = out.earlier.groups[g];
    auto it = std::find(out.later.groups.begin(), out.later.groups.end(), name);
    if (it == out.later.groups.end()) continue;
    const auto h = static_cast<std::size_t>(it - out.later.groups.begin());
    std::array<QuantifierDelta, 7> row;
    for (std::size_t q = 0; q < row.size(); ++q) {
      const auto& a = out.earlier.cells[g][q].summary;
      const auto& b = out.later.cells[h][q].summary;
      if (a) row[q].earlier = a->median;
      if (b) row[q].later = b->median;
      if (a && b && std::isfinite(a->median) && std::isfinite(b->median)) {
        row[q].delta = b->median - a->median;
        if (a->median != 0.0) row[q].delta_percent = 100.0 * *row[q].delta / a->median;
      }
    }
    out.groups.push_back(name);
    out.medians.push_back(row);
  }
  return out;
}

}  // namespace followup
