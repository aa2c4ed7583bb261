#include "followup/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "followup/error.hpp"
#include "followup/quantifiers.hpp"

namespace followup {
namespace {

using report::Cell;
using report::Section;
using report::Table;

constexpr const char* kKmMethod = "km; ties=events-first; se=greenwood; ci=log-log";

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string level_tag(double level) { return fmt("%g%%", 100.0 * level); }

std::vector<std::string> groups_of(const Snapshot& snapshot) { return snapshot.arms(); }

Section not_computed(std::string id, std::string title, std::string why) {
  Section s;
  s.id = std::move(id);
  s.title = std::move(title);
  s.notes.push_back("not computed: " + std::move(why));
  return s;
}

std::vector<double> risk_grid(const Snapshot& snapshot, const AnalysisOptions& options) {
  double max_time = 0.0;
  for (const auto& p : snapshot.patients) max_time = std::max(max_time, p.time);
  std::vector<double> grid;
  for (double t = 0.0; t <= max_time + 1e-9; t += 12.0) grid.push_back(t);
  for (double m : options.milestones) grid.push_back(m);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace

std::optional<std::pair<std::string, std::string>> resolve_arms(const Snapshot& snapshot,
                                                                const AnalysisOptions& options) {
  const auto arms = snapshot.arms();
  auto has = [&](const std::string& a) {
    return std::find(arms.begin(), arms.end(), a) != arms.end();
  };
  if (options.control && !has(*options.control)) {
    throw InputError("control arm '" + *options.control + "' not in data");
  }
  if (options.treatment && !has(*options.treatment)) {
    throw InputError("treatment arm '" + *options.treatment + "' not in data");
  }
  if (arms.size() < 2) return std::nullopt;
  std::string control = arms[0];
  if (options.control) {
    control = *options.control;
  } else if (has("control") && options.treatment != "control") {
    control = "control";
  }
  std::string treatment;
  if (options.treatment) {
    treatment = *options.treatment;
  } else {
    for (const auto& a : arms) {
      if (a != control) {
        treatment = a;
        break;
      }
    }
  }
  if (control == treatment) throw InputError("control and treatment arms must differ");
  return std::make_pair(control, treatment);
}

Section one_sample_precision(const Snapshot& snapshot, const AnalysisOptions& options) {
  Section s;
  s.id = "Q1";
  s.title = "Precision of the KM estimate per arm";

  Table medians;
  medians.id = "median";
  medians.title = "Median time-to-event with " + level_tag(options.level) + " CI";
  medians.method = std::string(kKmMethod) + "; quantile=inf{t: S(t)<=0.5}; ci=brookmeyer-crowley";
  medians.columns = {"arm", "n", "events", "median", "lower", "upper"};

  Table milestones;
  milestones.id = "milestones";
  milestones.title = "Milestone event-free probabilities";
  milestones.method = kKmMethod;
  milestones.columns = {"arm", "month", "estimate", "lower", "upper", "se", "n_risk", "flag"};

  for (const auto& arm : groups_of(snapshot)) {
    const auto sample = snapshot.observed(arm);
    const auto curve = km_fit(sample);
    const auto q = km_quantile(curve, 0.5, options.level);
    std::size_t events = 0;
    for (const auto& o : sample) events += o.event;
    medians.rows.push_back({Cell::str(arm), Cell::num(static_cast<double>(sample.size())),
                            Cell::num(static_cast<double>(events)), Cell::num(q.point),
                            Cell::num(q.lower), Cell::num(q.upper)});
    for (double t : options.milestones) {
      const auto m = milestone_estimate(curve, t, options.level);
      std::string flag = m.estimate.extrapolated ? "extrapolated"
                         : m.estimate.degenerate ? "degenerate"
                                                 : "";
      milestones.rows.push_back({Cell::str(arm), Cell::num(t), Cell::num(m.estimate.point),
                                 Cell::num(m.estimate.lower), Cell::num(m.estimate.upper),
                                 Cell::num(m.estimate.se.value_or(0.0)),
                                 Cell::num(static_cast<double>(m.n_risk)), Cell::str(flag)});
    }
  }
  s.tables.push_back(std::move(medians));
  s.tables.push_back(std::move(milestones));
  return s;
}

Section one_sample_reliability(const Snapshot& snapshot, const AnalysisOptions& options) {
  Section s;
  s.id = "Q2";
  s.title = "Reliability: patients at risk and pointwise CI width";
  s.notes.push_back("Disregard the KM estimate where the CI is wider than acceptable or too few "
                    "patients remain at risk.");
  const auto grid = risk_grid(snapshot, options);

  Table table;
  table.id = "at_risk";
  table.title = "Number at risk and " + level_tag(options.level) + " CI width";
  table.method = kKmMethod;
  table.columns = {"arm", "month", "n_risk", "admin_censored_later", "ltfu_later", "events_later",
                   "ci_width"};
  for (const auto& arm : groups_of(snapshot)) {
    const auto patients = snapshot.select(arm);
    const auto sample = snapshot.observed(arm);
    const auto curve = km_fit(sample);
    const auto counts = at_risk_table(sample, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::size_t admin = 0;
      std::size_t ltfu = 0;
      std::size_t events = 0;
      for (const auto& p : patients) {
        if (p.time < grid[i]) continue;
        admin += p.reason == CensorReason::AdminCensored;
        ltfu += p.reason == CensorReason::LostToFollowUp;
        events += p.is_event();
      }
      const auto ci = km_ci(curve, grid[i], options.level);
      table.rows.push_back({Cell::str(arm), Cell::num(grid[i]),
                            Cell::num(static_cast<double>(counts[i])),
                            Cell::num(static_cast<double>(admin)),
                            Cell::num(static_cast<double>(ltfu)),
                            Cell::num(static_cast<double>(events)),
                            Cell::num(ci.upper - ci.lower)});
    }
  }
  s.tables.push_back(std::move(table));
  return s;
}

Section one_sample_stability(const Snapshot& snapshot, const AnalysisOptions& options) {
  Section s;
  s.id = "Q3";
  s.title = "Stability of the KM estimate per arm (extreme scenarios)";
  Table table;
  table.id = "stability_index";
  table.title = "Stability index (0 = stable, 1 = unstable)";
  table.method = "best=censored kept to last event; worst=event at censoring + " +
                 fmt("%.6g", options.delta) + " months; horizon=max worst-case time + delta";
  table.columns = {"arm", "n_censored", "index", "horizon", "flag"};
  for (const auto& arm : groups_of(snapshot)) {
    const auto sample = snapshot.observed(arm);
    const auto bounds = betensky_bounds(sample, options.delta);
    const auto index = stability_index(bounds);
    std::size_t censored = 0;
    for (const auto& o : sample) censored += !o.event;
    table.rows.push_back({Cell::str(arm), Cell::num(static_cast<double>(censored)),
                          Cell::num(index.value), Cell::num(index.horizon),
                          Cell::str(bounds.degenerate ? "no events" : "")});
  }
  s.tables.push_back(std::move(table));
  return s;
}

Section one_sample_information(const Snapshot& snapshot, const AnalysisOptions& options) {
  Section s;
  s.id = "Q4";
  s.title = "Information per arm";
  s.notes.push_back("Power for milestone or median tests depends on more than the event count; "
                    "events and patients at risk at each milestone are listed.");
  Table table;
  table.id = "information";
  table.title = "Events and patients at risk";
  table.method = "counts";
  table.columns = {"arm", "n", "events", "month", "n_risk"};
  for (const auto& arm : groups_of(snapshot)) {
    const auto sample = snapshot.observed(arm);
    std::size_t events = 0;
    for (const auto& o : sample) events += o.event;
    const auto counts = at_risk_table(sample, options.milestones);
    for (std::size_t i = 0; i < options.milestones.size(); ++i) {
      table.rows.push_back({Cell::str(arm), Cell::num(static_cast<double>(sample.size())),
                            Cell::num(static_cast<double>(events)),
                            Cell::num(options.milestones[i]),
                            Cell::num(static_cast<double>(counts[i]))});
    }
  }
  s.tables.push_back(std::move(table));
  return s;
}

Section effect_precision(const Snapshot& snapshot, const AnalysisOptions& options) {
  const auto arms = resolve_arms(snapshot, options);
  if (!arms) return not_computed("Q5", "Precision of the effect estimate", "single-arm data");
  const auto sample = to_two_arm(snapshot, arms->first, arms->second);

  Section s;
  s.id = "Q5";
  s.title = "Precision of the effect estimate (" + arms->second + " vs " + arms->first + ")";

  Table hr;
  hr.id = "hazard_ratio";
  hr.title = "Hazard ratio with " + level_tag(options.level) + " Wald CI";
  hr.method = "cox two-group; ties=efron; se=observed information";
  hr.columns = {"hr", "lower", "upper", "log_hr", "se", "wald_p", "iterations", "status"};
  try {
    CoxOptions cox_options;
    cox_options.level = options.level;
    const auto fit = cox_two_group(sample, cox_options);
    hr.rows.push_back({Cell::num(fit.hr_ci.point), Cell::num(fit.hr_ci.lower),
                       Cell::num(fit.hr_ci.upper), Cell::num(fit.log_hr), Cell::num(fit.se),
                       Cell::num(fit.wald_p), Cell::num(fit.iterations),
                       Cell::str(fit.converged ? "converged" : "not converged")});
  } catch (const MonotoneLikelihood& e) {
    hr.rows.push_back({Cell::not_computed(), Cell::not_computed(), Cell::not_computed(),
                       Cell::not_computed(), Cell::not_computed(), Cell::not_computed(),
                       Cell::not_computed(), Cell::str(e.what())});
    s.signals.push_back(e.what());
  }
  s.tables.push_back(std::move(hr));

  Table lr;
  lr.id = "logrank";
  lr.title = "Logrank tests (two-sided)";
  lr.method = "hypergeometric variance; weights=fleming-harrington(rho,gamma) on pooled KM S(t-)";
  lr.columns = {"rho", "gamma", "o_minus_e", "variance", "z", "chi2", "p"};
  for (auto w : {LogrankWeights{0.0, 0.0}, LogrankWeights{0.0, 1.0}}) {
    try {
      const auto r = logrank(sample, w);
      lr.rows.push_back({Cell::num(w.rho), Cell::num(w.gamma), Cell::num(r.o_minus_e),
                         Cell::num(r.variance), Cell::num(r.z), Cell::num(r.chi2),
                         Cell::num(r.p)});
    } catch (const ComputationError& e) {
      s.notes.push_back(std::string("logrank: ") + e.what());
    }
  }
  s.tables.push_back(std::move(lr));

  Table md;
  md.id = "milestone_difference";
  md.title = "Milestone differences " + arms->second + " - " + arms->first;
  md.method = std::string(kKmMethod) + "; difference ci=plain normal, clipped to [-1,1]";
  md.columns = {"month", arms->first, arms->second, "difference", "lower", "upper", "flag"};
  const auto ctl = km_fit(sample.control);
  const auto trt = km_fit(sample.treatment);
  for (double t : options.milestones) {
    const auto d = milestone_difference(sample, t, options.level);
    md.rows.push_back({Cell::num(t), Cell::num(ctl.at(t)), Cell::num(trt.at(t)),
                       Cell::num(d.point), Cell::num(d.lower), Cell::num(d.upper),
                       Cell::str(d.extrapolated ? "extrapolated" : "")});
  }
  s.tables.push_back(std::move(md));

  Table rm;
  rm.id = "rmst_difference";
  rm.title = "RMST difference " + arms->second + " - " + arms->first;
  try {
    const auto r = rmst_difference(sample, options.tau_policy, options.level);
    rm.method = "rmst=area under KM; var=product-limit tail formula; tau=" + r.tau_rule;
    rm.columns = {"tau", "rmst_" + arms->first, "rmst_" + arms->second, "difference", "lower",
                  "upper", "p"};
    rm.rows.push_back({Cell::num(r.tau_used), Cell::num(r.control.point),
                       Cell::num(r.treatment.point), Cell::num(r.estimate.point),
                       Cell::num(r.estimate.lower), Cell::num(r.estimate.upper), Cell::num(r.p)});
  } catch (const InputError& e) {
    rm.columns = {"tau"};
    rm.rows.push_back({Cell::not_computed()});
    s.notes.push_back(std::string("rmst: ") + e.what());
  }
  s.tables.push_back(std::move(rm));
  return s;
}

Section effect_stability(const Snapshot& snapshot, const AnalysisOptions& options) {
  const auto arms = resolve_arms(snapshot, options);
  if (!arms) return not_computed("Q6", "Stability of the effect estimate", "single-arm data");
  const auto sample = to_two_arm(snapshot, arms->first, arms->second);

  Section s;
  s.id = "Q6";
  s.title = "Stability of the effect estimate";
  s.notes.push_back("Under PH a HR estimate only becomes more precise with further follow-up; "
                    "see Q8 for the PH check. Under non-PH use the extreme scenarios.");
  Table table;
  table.id = "extremes";
  table.title = "Extreme-scenario bounds";
  table.method = "stability index per arm; cross-arm = integral(upper_trt - lower_ctl) up to "
                 "min horizon (extreme deterministic bound)";
  table.columns = {"quantity", "value", "horizon"};
  for (const auto* arm : {&arms->first, &arms->second}) {
    const auto idx = stability_index(snapshot.observed(*arm), options.delta);
    table.rows.push_back(
        {Cell::str("stability index " + *arm), Cell::num(idx.value), Cell::num(idx.horizon)});
  }
  try {
    const auto x = cross_arm_extreme_rmst(sample, options.delta);
    table.rows.push_back(
        {Cell::str("extreme RMST difference"), Cell::num(x.value), Cell::num(x.horizon)});
  } catch (const ComputationError& e) {
    table.rows.push_back(
        {Cell::str("extreme RMST difference"), Cell::not_computed(), Cell::not_computed()});
    s.notes.push_back(e.what());
  }
  s.tables.push_back(std::move(table));
  return s;
}

Section effect_information(const Snapshot& snapshot, const AnalysisOptions& options) {
  Section s;
  s.id = "Q7";
  s.title = "Information";
  Table table;
  table.id = "information";
  table.title = "Information fraction and RMST information";
  table.method = "fraction = d_int / d_fin; rmst information = 1 / Var(RMST difference)";
  table.columns = {"quantity", "value"};
  if (options.d_fin) {
    std::size_t events = 0;
    for (const auto& p : snapshot.patients) events += p.is_event();
    const auto f = information_fraction(options.d_int.value_or(events), *options.d_fin);
    table.rows.push_back({Cell::str("d_int"), Cell::num(static_cast<double>(f.d_int))});
    table.rows.push_back({Cell::str("d_fin"), Cell::num(static_cast<double>(f.d_fin))});
    table.rows.push_back({Cell::str("information fraction"), Cell::num(f.fraction)});
  } else {
    table.rows.push_back({Cell::str("information fraction"), Cell::not_computed()});
    s.notes.push_back("no planned final event count given (--d-fin)");
  }
  if (const auto arms = resolve_arms(snapshot, options)) {
    try {
      const auto r = rmst_difference(to_two_arm(snapshot, arms->first, arms->second),
                                     options.tau_policy, options.level);
      table.rows.push_back({Cell::str("rmst difference information"), Cell::num(r.information())});
    } catch (const InputError& e) {
      s.notes.push_back(std::string("rmst: ") + e.what());
    }
  }
  s.tables.push_back(std::move(table));
  return s;
}

Section ph_reliability(const Snapshot& snapshot, const AnalysisOptions& options) {
  const auto arms = resolve_arms(snapshot, options);
  if (!arms) return not_computed("Q8", "Proportional hazards", "single-arm data");
  const auto sample = to_two_arm(snapshot, arms->first, arms->second);
  Section s;
  s.id = "Q8";
  s.title = "Proportional hazards";
  Table table;
  table.id = "ph_test";
  table.title = "Scaled Schoenfeld residual test";
  table.method = std::string("grambsch-therneau; transform=") +
                 (options.ph_transform == TimeTransform::Identity ? "identity" : "km");
  table.columns = {"chi2", "df", "p", "correlation"};
  try {
    const auto fit = cox_two_group(sample);
    const auto r = schoenfeld_ph_test(sample, fit, options.ph_transform);
    table.rows.push_back(
        {Cell::num(r.chi2), Cell::num(1.0), Cell::num(r.p), Cell::num(r.correlation)});
  } catch (const ComputationError& e) {
    table.rows.push_back(
        {Cell::not_computed(), Cell::num(1.0), Cell::not_computed(), Cell::not_computed()});
    if (dynamic_cast<const MonotoneLikelihood*>(&e)) {
      s.signals.push_back(e.what());
    } else {
      s.notes.push_back(e.what());
    }
  }
  s.tables.push_back(std::move(table));
  return s;
}

Section censoring_pattern(const Snapshot& snapshot, const AnalysisOptions& options) {
  Section s;
  s.id = "Q9";
  s.title = "Censoring pattern by arm";
  const auto comparison = censoring_comparison(snapshot, options.split_censoring_by_reason);
  if (comparison.warning) s.notes.push_back(*comparison.warning);

  Table curves;
  curves.id = "censoring_distribution";
  curves.title = "Reverse-KM censoring distribution";
  curves.method = "reverse km; censorings of the given reason are the event";
  curves.columns = {"arm", "reason", "median", "q25", "q75", "censored"};
  for (const auto& c : comparison.curves) {
    std::size_t n = 0;
    for (const auto& k : c.curve.knots) n += k.n_event;
    curves.rows.push_back({Cell::str(c.arm), Cell::str(c.reason),
                           Cell::num(km_quantile(c.curve, 0.5, options.level).point),
                           Cell::num(km_quantile(c.curve, 0.25, options.level).point),
                           Cell::num(km_quantile(c.curve, 0.75, options.level).point),
                           Cell::num(static_cast<double>(n))});
  }
  s.tables.push_back(std::move(curves));

  Table reasons;
  reasons.id = "reasons";
  reasons.title = "Terminal status by arm";
  reasons.method = "counts";
  reasons.columns = {"arm", "n", "event", "admin", "ltfu", "ltfu %"};
  for (const auto& arm : snapshot.arms()) {
    std::size_t counts[3] = {0, 0, 0};
    const auto patients = snapshot.select(arm);
    for (const auto& p : patients) ++counts[static_cast<int>(p.reason)];
    reasons.rows.push_back(
        {Cell::str(arm), Cell::num(static_cast<double>(patients.size())),
         Cell::num(static_cast<double>(counts[0])), Cell::num(static_cast<double>(counts[1])),
         Cell::num(static_cast<double>(counts[2])),
         Cell::num(100.0 * static_cast<double>(counts[2]) / static_cast<double>(patients.size()))});
  }
  s.tables.push_back(std::move(reasons));

  if (const auto arms = resolve_arms(snapshot, options)) {
    Table test;
    test.id = "censoring_logrank";
    test.title = "Logrank comparison of censoring distributions";
    test.method = "logrank on indicator-flipped data";
    test.columns = {"z", "chi2", "p"};
    try {
      const auto r = censoring_logrank(snapshot, arms->first, arms->second);
      test.rows.push_back({Cell::num(r.z), Cell::num(r.chi2), Cell::num(r.p)});
    } catch (const ComputationError& e) {
      test.rows.push_back({Cell::not_computed(), Cell::not_computed(), Cell::not_computed()});
      s.notes.push_back(e.what());
    }
    s.tables.push_back(std::move(test));
  }
  return s;
}

Section accrual_section(const Snapshot& snapshot) {
  Section s;
  s.id = "accrual";
  s.title = "Accrual";
  std::vector<double> entries;
  for (const auto& p : snapshot.patients) entries.push_back(p.entry);
  const auto curve = ecdf(entries);
  Table table;
  table.id = "accrual_ecdf";
  table.title = "Empirical CDF of entry time (months from first entry)";
  table.method = "ecdf, right-continuous";
  table.columns = {"fraction_enrolled", "month"};
  for (double f : {0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    double month = curve.max_time;
    for (const auto& k : curve.knots) {
      if (k.value >= f - 1e-12) {
        month = k.time;
        break;
      }
    }
    table.rows.push_back({Cell::num(f), Cell::num(month)});
  }
  s.tables.push_back(std::move(table));
  return s;
}

std::map<std::string, std::string> snapshot_metadata(const Snapshot& snapshot,
                                                     const AnalysisOptions& options) {
  std::map<std::string, std::string> meta;
  meta["snapshot"] = snapshot.label;
  meta["ccod_months"] = report::format_number(snapshot.ccod);
  meta["patients"] = std::to_string(snapshot.patients.size());
  meta["level"] = report::format_number(options.level);
  meta["time_unit"] = "months";
  meta["tie_rule"] = "events before censorings";
  meta["ci_transform"] = "log-log (survival), plain normal (differences)";
  meta["tau_policy"] = options.tau_policy.kind == TauPolicy::Kind::FixedTau
                           ? "fixed " + report::format_number(options.tau_policy.tau)
                           : "min-of-max-observed";
  if (const auto arms = resolve_arms(snapshot, options)) {
    meta["control"] = arms->first;
    meta["treatment"] = arms->second;
  }
  return meta;
}

report::ReportBundle analyze(const Snapshot& snapshot, const AnalysisOptions& options) {
  snapshot.validate();
  report::ReportBundle bundle;
  bundle.metadata = snapshot_metadata(snapshot, options);
  bundle.sections.push_back(one_sample_precision(snapshot, options));
  bundle.sections.push_back(one_sample_reliability(snapshot, options));
  bundle.sections.push_back(one_sample_stability(snapshot, options));
  bundle.sections.push_back(one_sample_information(snapshot, options));
  bundle.sections.push_back(effect_precision(snapshot, options));
  bundle.sections.push_back(effect_stability(snapshot, options));
  bundle.sections.push_back(effect_information(snapshot, options));
  bundle.sections.push_back(ph_reliability(snapshot, options));
  bundle.sections.push_back(censoring_pattern(snapshot, options));
  bundle.sections.push_back(accrual_section(snapshot));
  bundle.sections.push_back(report::quantifier_section(summarize_all(snapshot)));
  return bundle;
}

}  // namespace followup
