#include "followup/sim.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <regex>

#include "followup/error.hpp"

namespace followup {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform on the open interval (0, 1) from the top 53 bits.
double open_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

std::string patient_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "P%05zu", i + 1);
  return buf;
}

Snapshot classify(const LatentTrial& latent, double ccod, std::string label) {
  Snapshot out;
  out.ccod = ccod;
  out.label = std::move(label);
  for (std::size_t i = 0; i < latent.patients.size(); ++i) {
    const auto& p = latent.patients[i];
    if (p.entry > ccod) continue;
    PatientRecord rec;
    rec.id = patient_id(i);
    rec.arm = p.treated ? latent.treatment_label : latent.control_label;
    rec.entry = p.entry;
    const bool event_first = p.event_time < p.ltfu_time;
    const double resolved = event_first ? p.event_time : p.ltfu_time;
    // Compare on the calendar scale so the d-th event defining the cut-off is
    // itself classified as an event.
    if (p.entry + resolved <= ccod) {
      rec.time = resolved;
      rec.reason = event_first ? CensorReason::Event : CensorReason::LostToFollowUp;
    } else {
      rec.time = ccod - p.entry;
      rec.reason = CensorReason::AdminCensored;
    }
    out.patients.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

double SimConfig::ltfu_rate() const {
  if (ltfu_probability <= 0.0) return 0.0;
  return -std::log1p(-ltfu_probability) / ltfu_horizon;
}

double SimConfig::rate_from_median(double median_months) {
  if (!(median_months > 0.0)) throw InputError("median must be > 0");
  return std::log(2.0) / median_months;
}

std::vector<Piece> SimConfig::control_hazard() const { return {{0.0, base_rate}}; }

std::vector<Piece> SimConfig::treatment_hazard() const {
  std::vector<Piece> out;
  for (const auto& piece : hr_schedule) out.push_back({piece.start, base_rate * piece.value});
  return out;
}

void SimConfig::validate() const {
  if (!(base_rate >= 0.0)) throw InputError("base_rate must be >= 0");
  if (hr_schedule.empty() || hr_schedule.front().start != 0.0) {
    throw InputError("hr_schedule must start at month 0");
  }
  for (std::size_t i = 0; i < hr_schedule.size(); ++i) {
    if (!(hr_schedule[i].value >= 0.0)) throw InputError("hazard ratios must be >= 0");
    if (i > 0 && !(hr_schedule[i].start > hr_schedule[i - 1].start)) {
      throw InputError("hr_schedule starts must be strictly increasing");
    }
  }
  if (!(ltfu_probability >= 0.0 && ltfu_probability < 1.0)) {
    throw InputError("ltfu_probability must lie in [0, 1)");
  }
  if (!(ltfu_horizon > 0.0)) throw InputError("ltfu_horizon must be > 0");
  if (!(ramp_months >= 0.0)) throw InputError("ramp_months must be >= 0");
  if (!(ramp_rate >= 0.0) || !(accrual_rate > 0.0)) {
    throw InputError("accrual rates must be >= 0 (steady rate > 0)");
  }
  if (max_patients < 1) throw InputError("max_patients must be >= 1");
  if (control_ratio + treatment_ratio == 0) throw InputError("randomization ratio is empty");
  if (cutoff.kind == Cutoff::Kind::Events && cutoff.events < 1) {
    throw InputError("event cut-off must be >= 1");
  }
}

SimConfig SimConfig::delayed_separation() { return SimConfig{}; }

SimConfig SimConfig::proportional_hazards(double hr) {
  SimConfig config;
  config.hr_schedule = {{0.0, hr}};
  return config;
}

double piecewise_exp_sample(std::span<const Piece> rates, double u) {
  if (rates.empty() || rates.front().start != 0.0) {
    throw InputError("hazard pieces must start at 0");
  }
  if (!(u > 0.0 && u <= 1.0)) throw InputError("u must lie in (0, 1]");
  const double target = -std::log(u);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const double start = rates[i].start;
    const double end = i + 1 < rates.size() ? rates[i + 1].start : kInf;
    const double rate = rates[i].value;
    if (rate < 0.0) throw InputError("hazard rates must be >= 0");
    if (rate > 0.0) {
      const double gain = rate * (end - start);
      if (cumulative + gain >= target) return start + (target - cumulative) / rate;
      cumulative += gain;
    }
  }
  return kInf;
}

std::uint64_t replicate_seed(std::uint64_t master_seed, std::uint64_t replicate) {
  return splitmix64(master_seed ^ splitmix64(replicate));
}

LatentTrial simulate_trial(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  LatentTrial trial;
  auto& patients = trial.patients;
  patients.reserve(config.max_patients);

  // Accrual: the cumulative expected count N(t) is piecewise linear; month m
  // receives floor(N(m+1)) - floor(N(m)) patients placed uniformly within it.
  auto expected = [&](double t) {
    const double ramp = std::min(t, config.ramp_months);
    return config.ramp_rate * ramp + config.accrual_rate * std::max(0.0, t - config.ramp_months);
  };
  std::vector<double> month_entries;
  for (std::size_t month = 0; patients.size() < config.max_patients; ++month) {
    const auto m = static_cast<double>(month);
    const auto count = static_cast<std::size_t>(std::floor(expected(m + 1.0)) -
                                                std::floor(expected(m)));
    month_entries.clear();
    for (std::size_t k = 0; k < count; ++k) month_entries.push_back(m + open_uniform(rng));
    std::sort(month_entries.begin(), month_entries.end());
    for (double entry : month_entries) {
      if (patients.size() == config.max_patients) break;
      patients.push_back({entry, 0.0, 0.0, false});
    }
  }

  // Exact allocation per the randomization ratio, in random order.
  const std::size_t n = patients.size();
  const auto n_treated = static_cast<std::size_t>(std::llround(
      static_cast<double>(n) * static_cast<double>(config.treatment_ratio) /
      static_cast<double>(config.control_ratio + config.treatment_ratio)));
  std::vector<char> treated(n, 0);
  std::fill(treated.begin(), treated.begin() + static_cast<std::ptrdiff_t>(n_treated), 1);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(treated[i - 1], treated[j]);
  }

  const auto control = config.control_hazard();
  const auto treatment = config.treatment_hazard();
  const double ltfu_rate = config.ltfu_rate();
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = patients[i];
    p.treated = treated[i] != 0;
    p.event_time = piecewise_exp_sample(p.treated ? treatment : control, open_uniform(rng));
    const double u = open_uniform(rng);
    p.ltfu_time = ltfu_rate > 0.0 ? -std::log(u) / ltfu_rate : kInf;
  }
  return trial;
}

Snapshot snapshot_at_events(const LatentTrial& latent, std::size_t events) {
  if (events < 1) throw InputError("event cut-off must be >= 1");
  std::vector<double> calendar;
  for (const auto& p : latent.patients) {
    if (p.event_time < p.ltfu_time) calendar.push_back(p.entry + p.event_time);
  }
  if (calendar.size() < events) {
    throw InputError("latent trial produces only " + std::to_string(calendar.size()) +
                     " events; requested " + std::to_string(events));
  }
  const auto nth = calendar.begin() + static_cast<std::ptrdiff_t>(events - 1);
  std::nth_element(calendar.begin(), nth, calendar.end());
  return classify(latent, *nth, "events=" + std::to_string(events));
}

Snapshot snapshot_at_time(const LatentTrial& latent, double ccod) {
  auto out = classify(latent, ccod, "ccod=" + std::to_string(ccod));
  if (out.patients.empty()) throw InputError("ccod precedes the first entry: empty snapshot");
  return out;
}

Snapshot snapshot_at_cutoff(const LatentTrial& latent, const Cutoff& cutoff) {
  return cutoff.kind == Cutoff::Kind::Events ? snapshot_at_events(latent, cutoff.events)
                                             : snapshot_at_time(latent, cutoff.calendar);
}

std::string PowerTest::name() const {
  char buf[64];
  switch (kind) {
    case Kind::Logrank:
      if (weights.rho == 0.0 && weights.gamma == 0.0) return "logrank";
      std::snprintf(buf, sizeof buf, "logrank(%g,%g)", weights.rho, weights.gamma);
      return buf;
    case Kind::RmstDiff:
      if (policy.kind == TauPolicy::Kind::MinOfMaxObserved) return "rmst";
      std::snprintf(buf, sizeof buf, "rmst(%g)", policy.tau);
      return buf;
    case Kind::CoxWald:
      return "cox";
    case Kind::SchoenfeldPh:
      return "ph";
  }
  return "";
}

PowerTest PowerTest::parse(const std::string& token) {
  static const std::regex weighted(R"(logrank\(\s*([0-9.eE+-]+)\s*,\s*([0-9.eE+-]+)\s*\))");
  static const std::regex fixed_tau(R"(rmst\(\s*([0-9.eE+-]+)\s*\))");
  PowerTest test;
  std::smatch m;
  if (token == "logrank") return test;
  if (std::regex_match(token, m, weighted)) {
    test.weights = {std::stod(m[1]), std::stod(m[2])};
    return test;
  }
  if (token == "rmst") {
    test.kind = Kind::RmstDiff;
    return test;
  }
  if (std::regex_match(token, m, fixed_tau)) {
    test.kind = Kind::RmstDiff;
    test.policy = TauPolicy::fixed(std::stod(m[1]));
    return test;
  }
  if (token == "cox") {
    test.kind = Kind::CoxWald;
    return test;
  }
  if (token == "ph") {
    test.kind = Kind::SchoenfeldPh;
    return test;
  }
  throw InputError("unknown test '" + token + "'");
}

PowerResult power_study(const SimConfig& config, std::size_t reps,
                        std::span<const PowerTest> tests, double alpha,
                        std::uint64_t master_seed, unsigned threads) {
  if (reps < 1) throw InputError("reps must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  if (tests.empty()) throw InputError("no tests requested");
  config.validate();

  enum Outcome : signed char { kAccept = 0, kReject = 1, kFailed = -1 };
  const std::vector<PowerTest> requested(tests.begin(), tests.end());

  auto outcomes = map_replicates(
      config, reps, master_seed,
      [&](std::size_t, const Snapshot& snapshot) {
        std::vector<signed char> row(requested.size(), kFailed);
        const auto sample = to_two_arm(snapshot, "control", "treatment");
        std::optional<CoxResult> cox;
        for (std::size_t k = 0; k < requested.size(); ++k) {
          const auto& test = requested[k];
          try {
            double p = 1.0;
            switch (test.kind) {
              case PowerTest::Kind::Logrank:
                p = logrank(sample, test.weights).p;
                break;
              case PowerTest::Kind::RmstDiff:
                p = rmst_difference(sample, test.policy).p;
                break;
              case PowerTest::Kind::CoxWald:
                if (!cox) cox = cox_two_group(sample);
                p = cox->wald_p;
                break;
              case PowerTest::Kind::SchoenfeldPh:
                if (!cox) cox = cox_two_group(sample);
                p = schoenfeld_ph_test(sample, *cox).p;
                break;
            }
            row[k] = p < alpha ? kReject : kAccept;
          } catch (const std::exception&) {
            row[k] = kFailed;
          }
        }
        return row;
      },
      threads);

  PowerResult out;
  out.reps = reps;
  out.alpha = alpha;
  out.master_seed = master_seed;
  for (std::size_t k = 0; k < requested.size(); ++k) {
    PowerRow row;
    row.test = requested[k];
    for (const auto& rep : outcomes) {
      if (rep[k] == kFailed) {
        ++row.failures;
      } else {
        ++row.valid;
        if (rep[k] == kReject) ++row.rejections;
      }
    }
    if (row.valid > 0) {
      const auto valid = static_cast<double>(row.valid);
      row.rate = static_cast<double>(row.rejections) / valid;
      row.mc_se = std::sqrt(row.rate * (1.0 - row.rate) / valid);
    }
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace followup
