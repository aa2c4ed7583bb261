#pragma once

// The question battery run by `followup analyze`: one-sample questions
// (precision, reliability, stability, information) per arm, two-sample
// questions (effect precision, stability, information fraction, PH
// reliability, censoring pattern), follow-up quantifiers and accrual.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "followup/effects.hpp"
#include "followup/report.hpp"
#include "followup/snapshot.hpp"
#include "followup/stability.hpp"

namespace followup {

struct AnalysisOptions {
  // Defaults: an arm labelled "control" if present, else the first arm in the
  // file; the treatment arm is the first other arm.
  std::optional<std::string> control;
  std::optional<std::string> treatment;
  std::vector<double> milestones = {36.0, 60.0};
  TauPolicy tau_policy;
  std::optional<std::size_t> d_int;
  std::optional<std::size_t> d_fin;
  double level = 0.95;
  TimeTransform ph_transform = TimeTransform::Identity;
  double delta = kOneDay;
  bool split_censoring_by_reason = true;
};

// Resolved (control, treatment) labels, or nullopt for single-arm data.
std::optional<std::pair<std::string, std::string>> resolve_arms(const Snapshot& snapshot,
                                                                const AnalysisOptions& options);

report::Section one_sample_precision(const Snapshot& snapshot, const AnalysisOptions& options);
report::Section one_sample_reliability(const Snapshot& snapshot, const AnalysisOptions& options);
report::Section one_sample_stability(const Snapshot& snapshot, const AnalysisOptions& options);
report::Section one_sample_information(const Snapshot& snapshot, const AnalysisOptions& options);
report::Section effect_precision(const Snapshot& snapshot, const AnalysisOptions& options);
report::Section effect_stability(const Snapshot& snapshot, const AnalysisOptions& options);
report::Section effect_information(const Snapshot& snapshot, const AnalysisOptions& options);
report::Section ph_reliability(const Snapshot& snapshot, const AnalysisOptions& options);
report::Section censoring_pattern(const Snapshot& snapshot, const AnalysisOptions& options);
report::Section accrual_section(const Snapshot& snapshot);

std::map<std::string, std::string> snapshot_metadata(const Snapshot& snapshot,
                                                     const AnalysisOptions& options);

// Every section above plus the follow-up quantifier table.
report::ReportBundle analyze(const Snapshot& snapshot, const AnalysisOptions& options = {});

}  // namespace followup
