#pragma once

// Simulation of a two-arm time-to-event trial with staged accrual,
// piecewise-exponential event times, exponential loss to follow-up and an
// event-driven (or calendar) cut-off, plus a Monte Carlo power harness.
//
// Replicate r of a study with master seed m runs on the generator seeded
// with replicate_seed(m, r), so results do not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "followup/effects.hpp"
#include "followup/snapshot.hpp"

namespace followup {

// Piecewise-constant function of time since entry: value applies from start
// until the next piece's start.
struct Piece {
  double start = 0.0;
  double value = 0.0;
};

struct Cutoff {
  enum class Kind { Events, Calendar };
  Kind kind = Kind::Events;
  std::size_t events = 389;
  double calendar = 0.0;
};

// Control hazard of the delayed-separation design. Its implied median is
// ln(2)/0.012 = 57.76 months; use median_months = 60 in a config file for
// the rate ln(2)/60 = 0.01155 instead.
inline constexpr double kDefaultBaseRate = 0.012;

struct SimConfig {
  double base_rate = kDefaultBaseRate;  // control hazard, events per month
  std::vector<Piece> hr_schedule = {{0.0, 1.0}, {12.0, 0.65}};  // treatment / control
  double ltfu_probability = 0.025;  // P(LTFU <= ltfu_horizon)
  double ltfu_horizon = 12.0;
  double ramp_months = 6.0;
  double ramp_rate = 21.0;      // patients per month during ramp-up
  double accrual_rate = 42.0;   // patients per month afterwards
  std::size_t max_patients = 1000;
  std::size_t control_ratio = 1;
  std::size_t treatment_ratio = 1;
  Cutoff cutoff;

  double ltfu_rate() const;  // -ln(1 - p) / t
  static double rate_from_median(double median_months);
  std::vector<Piece> control_hazard() const;
  std::vector<Piece> treatment_hazard() const;

  // Throws InputError on negative rates, non-contiguous schedules and the like.
  void validate() const;

  // Delayed separation: no effect for 12 months, HR 0.65 afterwards.
  static SimConfig delayed_separation();
  // Same design with a constant hazard ratio.
  static SimConfig proportional_hazards(double hr);
};

// Smallest t with cumulative hazard >= -ln(u); +inf when the hazard is
// exhausted before that.
double piecewise_exp_sample(std::span<const Piece> rates, double u);

struct LatentPatient {
  double entry = 0.0;       // calendar months
  double event_time = 0.0;  // months from entry
  double ltfu_time = 0.0;   // months from entry, +inf when no LTFU
  bool treated = false;
};

struct LatentTrial {
  std::vector<LatentPatient> patients;  // in order of entry
  std::string control_label = "control";
  std::string treatment_label = "treatment";
};

std::uint64_t replicate_seed(std::uint64_t master_seed, std::uint64_t replicate);

LatentTrial simulate_trial(const SimConfig& config, std::uint64_t seed);

Snapshot snapshot_at_events(const LatentTrial& latent, std::size_t events);
Snapshot snapshot_at_time(const LatentTrial& latent, double ccod);
Snapshot snapshot_at_cutoff(const LatentTrial& latent, const Cutoff& cutoff);

// Runs fn(replicate_index, snapshot) for every replicate on up to `threads`
// workers and returns the results in replicate order. Exceptions escaping fn
// are rethrown after all workers stop.
template <class Fn>
auto map_replicates(const SimConfig& config, std::size_t reps, std::uint64_t master_seed, Fn fn,
                    unsigned threads = 0) {
  using Result = decltype(fn(std::size_t{}, std::declval<const Snapshot&>()));
  std::vector<Result> results(reps);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(reps, 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t r = next++; r < reps; r = next++) {
      try {
        const auto latent = simulate_trial(config, replicate_seed(master_seed, r));
        const auto snapshot = snapshot_at_cutoff(latent, config.cutoff);
        results[r] = fn(r, snapshot);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = reps;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

struct PowerTest {
  enum class Kind { Logrank, RmstDiff, CoxWald, SchoenfeldPh };
  Kind kind = Kind::Logrank;
  LogrankWeights weights;  // Logrank only
  TauPolicy policy;        // RmstDiff only

  std::string name() const;
  // "logrank", "logrank(0,1)", "rmst", "rmst(36)", "cox", "ph"
  static PowerTest parse(const std::string& token);
};

struct PowerRow {
  PowerTest test;
  std::size_t rejections = 0;
  std::size_t failures = 0;  // replicates where the test could not be computed
  std::size_t valid = 0;
  double rate = 0.0;
  double mc_se = 0.0;
};

struct PowerResult {
  std::size_t reps = 0;
  double alpha = 0.05;
  std::uint64_t master_seed = 0;
  std::vector<PowerRow> rows;
};

PowerResult power_study(const SimConfig& config, std::size_t reps,
                        std::span<const PowerTest> tests, double alpha,
                        std::uint64_t master_seed, unsigned threads = 0);

}  // namespace followup
