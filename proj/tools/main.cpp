#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "followup/analysis.hpp"
#include "followup/error.hpp"
#include "followup/io.hpp"
#include "followup/plotdata.hpp"
#include "followup/quantifiers.hpp"
#include "followup/report.hpp"
#include "followup/sim.hpp"
#include "followup/stability.hpp"

namespace {

using namespace followup;

enum ExitCode { kOk = 0, kInputError = 2, kComputationSignal = 3, kIoError = 4 };

struct InputArgs {
  std::string path;
  std::optional<double> ccod;
  std::optional<std::string> ccod_date;
  std::string unit = "months";
  std::string label;
  bool lenient = false;
};

struct OutputArgs {
  std::string format = "markdown";
  std::string out;
};

void add_input_options(CLI::App* cmd, InputArgs& args, bool required = true) {
  auto* opt = cmd->add_option("-i,--input", args.path, "Snapshot CSV");
  if (required) opt->required();
  cmd->add_option("--ccod", args.ccod, "Clinical cut-off, in --unit (default: max entry + time)");
  cmd->add_option("--ccod-date", args.ccod_date, "Clinical cut-off date (date mode)");
  cmd->add_option("--unit", args.unit, "Unit of time and entry_time columns")
      ->check(CLI::IsMember({"months", "days"}));
  cmd->add_option("--label", args.label, "Snapshot label (default: file name)");
  cmd->add_flag("--lenient", args.lenient, "Drop rejected rows instead of failing");
}

void add_output_options(CLI::App* cmd, OutputArgs& args) {
  cmd->add_option("--format", args.format, "Report format")
      ->check(CLI::IsMember({"json", "markdown", "csv-dir"}));
  cmd->add_option("-o,--out", args.out, "Output file (directory for csv-dir); default stdout");
}

io::IngestOptions ingest_options(const InputArgs& args, const std::string& path) {
  io::IngestOptions opts;
  opts.ccod = args.ccod;
  opts.ccod_date = args.ccod_date;
  opts.unit = args.unit == "days" ? io::TimeUnit::Days : io::TimeUnit::Months;
  opts.label = args.label.empty() ? path : args.label;
  opts.strict = !args.lenient;
  return opts;
}

Snapshot load(const InputArgs& args) {
  auto result = io::ingest_csv_file(args.path, ingest_options(args, args.path));
  for (const auto& d : result.diagnostics) std::cerr << "warning: " << d.to_string() << "\n";
  return std::move(result.snapshot);
}

report::Format parse_format(const std::string& s) {
  if (s == "json") return report::Format::Json;
  if (s == "csv-dir") return report::Format::CsvDir;
  return report::Format::Markdown;
}

int emit(const report::ReportBundle& bundle, const OutputArgs& args) {
  const auto format = parse_format(args.format);
  if (args.out.empty()) {
    if (format == report::Format::CsvDir) throw InputError("--format csv-dir requires --out");
    std::cout << (format == report::Format::Json ? report::render_json(bundle)
                                                 : report::render_markdown(bundle));
  } else {
    report::emit_report(bundle, format, args.out);
  }
  for (const auto& s : bundle.sections) {
    for (const auto& signal : s.signals) std::cerr << "signal: " << s.id << ": " << signal << "\n";
  }
  for (const auto& s : bundle.sections) {
    if (!s.signals.empty()) return kComputationSignal;
  }
  return kOk;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<double> default_grid(std::span<const plot::NamedCurve> curves) {
  double x_max = 0.0;
  for (const auto& c : curves) x_max = std::max(x_max, c.curve.max_time);
  std::vector<double> grid;
  const double step = x_max > 72.0 ? 12.0 : x_max > 24.0 ? 6.0 : 1.0;
  for (double t = 0.0; t <= x_max + 1e-9; t += step) grid.push_back(t);
  return grid;
}

void emit_curves(const std::vector<plot::NamedCurve>& curves, const std::string& plotdata,
                 const std::string& svg, const std::string& title) {
  if (!plotdata.empty()) write_text(plotdata, plot::plotdata_csv(curves));
  if (!svg.empty()) {
    plot::SvgOptions opts;
    opts.title = title;
    opts.risk_grid = default_grid(curves);
    write_text(svg, plot::render_svg(curves, opts));
  }
}

report::ReportBundle base_bundle(const Snapshot& snapshot, const AnalysisOptions& options) {
  report::ReportBundle bundle;
  bundle.metadata = snapshot_metadata(snapshot, options);
  return bundle;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Follow-up, stability and effect summaries for time-to-event trial snapshots"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "followup 0.1.0");

  InputArgs in;
  OutputArgs out;
  AnalysisOptions options;
  std::optional<double> tau;
  std::string tau_policy = "min-of-max";
  std::string ph_transform = "identity";
  std::optional<std::string> control;
  std::optional<std::string> treatment;
  std::string plotdata;
  std::string svg;

  auto add_arm_options = [&](CLI::App* cmd) {
    cmd->add_option("--control", control,
                    "Control arm label (default: arm named 'control', else first arm in file)");
    cmd->add_option("--treatment", treatment, "Treatment arm label (default: first other arm)");
  };

  auto* analyze = app.add_subcommand("analyze", "Full question battery on one snapshot");
  add_input_options(analyze, in);
  add_output_options(analyze, out);
  add_arm_options(analyze);
  analyze->add_option("--milestones", options.milestones, "Milestone months")->delimiter(',');
  analyze->add_option("--tau", tau, "RMST restriction time (implies --tau-policy fixed)");
  analyze->add_option("--tau-policy", tau_policy, "RMST restriction rule")
      ->check(CLI::IsMember({"fixed", "min-of-max"}));
  analyze->add_option("--d-int", options.d_int, "Events at the interim analysis (default: observed)");
  analyze->add_option("--d-fin", options.d_fin, "Events planned for the final analysis");
  analyze->add_option("--level", options.level, "Confidence level")->check(CLI::Range(0.5, 0.999));
  analyze->add_option("--ph-transform", ph_transform, "Time transform for the PH test")
      ->check(CLI::IsMember({"identity", "km"}));

  std::string quantifier = "all";
  std::optional<double> ltfu_fraction;
  std::uint64_t seed = 20240101;
  auto* quantify = app.add_subcommand("quantify", "Quantifications of follow-up");
  add_input_options(quantify, in);
  add_output_options(quantify, out);
  quantify->add_option("--quantifier", quantifier, "all or q1..q7");
  quantify->add_option("--ltfu-fraction", ltfu_fraction,
                       "Relabel this fraction of administratively censored patients as LTFU")
      ->check(CLI::Range(0.0, 1.0));
  quantify->add_option("--seed", seed, "Seed for --ltfu-fraction");

  bool per_arm = false;
  double delta_days = 1.0;
  auto* stability = app.add_subcommand("stability", "Extreme-scenario stability of KM curves");
  add_input_options(stability, in);
  add_output_options(stability, out);
  add_arm_options(stability);
  stability->add_flag("--per-arm", per_arm, "Bounds per arm (default: pooled)");
  stability->add_option("--delta-days", delta_days, "Worst-case event delay after censoring, days")
      ->check(CLI::PositiveNumber);
  stability->add_option("--plotdata", plotdata, "Write observed and bound curves as CSV");
  stability->add_option("--svg", svg, "Write an SVG of observed and bound curves");

  auto* censoring = app.add_subcommand("censoring", "Censoring pattern by arm");
  add_input_options(censoring, in);
  add_output_options(censoring, out);
  add_arm_options(censoring);
  censoring->add_option("--plotdata", plotdata, "Write reverse-KM curves as CSV");
  censoring->add_option("--svg", svg, "Write an SVG of reverse-KM curves");

  auto* km = app.add_subcommand("km", "Kaplan-Meier curves per arm");
  add_input_options(km, in);
  add_output_options(km, out);
  km->add_option("--milestones", options.milestones, "Milestone months")->delimiter(',');
  km->add_option("--level", options.level, "Confidence level")->check(CLI::Range(0.5, 0.999));
  km->add_option("--plotdata", plotdata, "Write step coordinates as CSV");
  km->add_option("--svg", svg, "Write an SVG with at-risk row");

  std::string config_path;
  std::string sim_out;
  std::optional<std::size_t> events;
  std::optional<double> calendar;
  auto* simulate = app.add_subcommand("simulate", "Simulate one trial snapshot");
  simulate->add_option("--config", config_path, "SimConfig JSON (default: built-in design)");
  simulate->add_option("--seed", seed, "Seed");
  simulate->add_option("-o,--out", sim_out, "Snapshot CSV (default stdout)");
  simulate->add_option("--events", events, "Override cut-off: event count");
  simulate->add_option("--calendar", calendar, "Override cut-off: calendar month");
  simulate->add_flag("--print-config", "Print the effective config as JSON to stderr");

  std::size_t reps = 2000;
  std::vector<std::string> tests = {"logrank", "rmst"};
  double alpha = 0.05;
  unsigned threads = 0;
  auto* power = app.add_subcommand("power", "Monte Carlo power study");
  power->add_option("--config", config_path, "SimConfig JSON (default: built-in design)");
  power->add_option("--reps", reps, "Replicates")->check(CLI::PositiveNumber);
  power->add_option("--tests", tests, "logrank, logrank(rho,gamma), rmst, rmst(tau), cox, ph")
      ->delimiter(';');
  power->add_option("--alpha", alpha, "Two-sided significance level")->check(CLI::Range(1e-6, 0.5));
  power->add_option("--seed", seed, "Master seed");
  power->add_option("--threads", threads, "Worker threads (default: hardware)");
  add_output_options(power, out);

  std::vector<std::string> inputs;
  std::vector<double> ccods;
  auto* rep = app.add_subcommand("report", "Quantifier changes across snapshots");
  rep->add_option("-i,--input", inputs, "Snapshot CSV, oldest first (repeat)")->required();
  rep->add_option("--ccod", ccods, "CCOD per input, in --unit (repeat, same order)");
  rep->add_option("--unit", in.unit, "Unit of time columns")->check(CLI::IsMember({"months", "days"}));
  rep->add_flag("--lenient", in.lenient, "Drop rejected rows instead of failing");
  add_output_options(rep, out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    options.control = control;
    options.treatment = treatment;
    if (tau) {
      options.tau_policy = TauPolicy::fixed(*tau);
    } else if (tau_policy == "fixed") {
      throw InputError("--tau-policy fixed requires --tau");
    }
    options.ph_transform =
        ph_transform == "km" ? TimeTransform::KaplanMeier : TimeTransform::Identity;

    if (*analyze) return emit(followup::analyze(load(in), options), out);

    if (*quantify) {
      auto snapshot = load(in);
      auto bundle = base_bundle(snapshot, options);
      if (ltfu_fraction) {
        auto re = ltfu_reassign(snapshot, *ltfu_fraction, seed);
        bundle.metadata["ltfu_relabeled"] = std::to_string(re.relabeled);
        bundle.metadata["ltfu_seed"] = std::to_string(seed);
        if (re.warning) std::cerr << "warning: " << *re.warning << "\n";
        snapshot = std::move(re.snapshot);
      }
      auto section = report::quantifier_section(summarize_all(snapshot));
      if (quantifier != "all") {
        const auto id = parse_quantifier(quantifier);
        if (!id) throw InputError("unknown quantifier '" + quantifier + "' (all, q1..q7)");
        const auto name = std::string(short_name(*id));
        for (auto& table : section.tables) {
          std::erase_if(table.rows, [&](const auto& row) { return row[0].text != name; });
        }
      }
      bundle.sections.push_back(std::move(section));
      return emit(bundle, out);
    }

    if (*stability) {
      const auto snapshot = load(in);
      options.delta = delta_days / kDaysPerMonth;
      auto bundle = base_bundle(snapshot, options);
      std::vector<plot::NamedCurve> curves;
      report::Section section;
      section.id = "stability";
      section.title = "Extreme-scenario stability";
      report::Table table;
      table.id = "stability_index";
      table.title = "Stability index (0 = stable, 1 = unstable)";
      table.method = "betensky bounds; delta=" + report::format_number(delta_days) + " days";
      table.columns = {"group", "n", "censored", "index", "horizon"};
      std::vector<std::optional<std::string>> groups = {std::nullopt};
      if (per_arm) {
        groups.clear();
        for (const auto& a : snapshot.arms()) groups.emplace_back(a);
      }
      for (const auto& g : groups) {
        const auto sample = snapshot.observed(g);
        const auto bounds = betensky_bounds(sample, options.delta);
        const auto idx = stability_index(bounds);
        std::size_t censored = 0;
        for (const auto& o : sample) censored += !o.event;
        const std::string name = g.value_or("pooled");
        table.rows.push_back({report::Cell::str(name),
                              report::Cell::num(static_cast<double>(sample.size())),
                              report::Cell::num(static_cast<double>(censored)),
                              report::Cell::num(idx.value), report::Cell::num(idx.horizon)});
        curves.push_back({name + ":observed", bounds.observed});
        curves.push_back({name + ":lower", bounds.lower});
        curves.push_back({name + ":upper", bounds.upper});
      }
      section.tables.push_back(std::move(table));
      bundle.sections.push_back(std::move(section));
      if (snapshot.arms().size() >= 2) {
        bundle.sections.push_back(effect_stability(snapshot, options));
      }
      emit_curves(curves, plotdata, svg, "Stability bounds");
      return emit(bundle, out);
    }

    if (*censoring) {
      const auto snapshot = load(in);
      auto bundle = base_bundle(snapshot, options);
      bundle.sections.push_back(censoring_pattern(snapshot, options));
      std::vector<plot::NamedCurve> curves;
      for (const auto& c : censoring_comparison(snapshot, options.split_censoring_by_reason).curves) {
        curves.push_back({c.arm + ":" + c.reason, c.curve});
      }
      emit_curves(curves, plotdata, svg, "Censoring distribution (reverse KM)");
      return emit(bundle, out);
    }

    if (*km) {
      const auto snapshot = load(in);
      auto bundle = base_bundle(snapshot, options);
      bundle.sections.push_back(one_sample_precision(snapshot, options));
      std::vector<plot::NamedCurve> curves;
      for (const auto& a : snapshot.arms()) curves.push_back({a, km_fit(snapshot.observed(a))});
      emit_curves(curves, plotdata, svg, "Kaplan-Meier");
      return emit(bundle, out);
    }

    if (*simulate) {
      auto config = config_path.empty() ? SimConfig{} : io::load_sim_config(config_path);
      if (events && calendar) throw InputError("--events and --calendar are exclusive");
      if (events) config.cutoff = {Cutoff::Kind::Events, *events, 0.0};
      if (calendar) config.cutoff = {Cutoff::Kind::Calendar, 0, *calendar};
      config.validate();
      if (simulate->count("--print-config")) std::cerr << io::sim_config_to_json(config) << "\n";
      const auto latent = simulate_trial(config, seed);
      const auto snapshot = snapshot_at_cutoff(latent, config.cutoff);
      std::cerr << "ccod=" << report::format_number(snapshot.ccod)
                << " patients=" << snapshot.patients.size() << "\n";
      if (sim_out.empty()) {
        io::write_snapshot_csv(std::cout, snapshot);
      } else {
        std::ostringstream buf;
        io::write_snapshot_csv(buf, snapshot);
        write_text(sim_out, buf.str());
      }
      return kOk;
    }

    if (*power) {
      const auto config = config_path.empty() ? SimConfig{} : io::load_sim_config(config_path);
      std::vector<PowerTest> parsed;
      for (const auto& t : tests) parsed.push_back(PowerTest::parse(t));
      const auto result = power_study(config, reps, parsed, alpha, seed, threads);
      report::ReportBundle bundle;
      bundle.metadata["reps"] = std::to_string(result.reps);
      bundle.metadata["alpha"] = report::format_number(result.alpha);
      bundle.metadata["seed"] = std::to_string(result.master_seed);
      report::Section section;
      section.id = "power";
      section.title = "Monte Carlo power";
      report::Table table;
      table.id = "power";
      table.title = "Rejection rates";
      table.method = "two-sided tests; rate = rejections / valid replicates";
      table.columns = {"test", "rejections", "valid", "failures", "rate", "mc_se"};
      for (const auto& row : result.rows) {
        table.rows.push_back({report::Cell::str(row.test.name()),
                              report::Cell::num(static_cast<double>(row.rejections)),
                              report::Cell::num(static_cast<double>(row.valid)),
                              report::Cell::num(static_cast<double>(row.failures)),
                              report::Cell::num(row.rate), report::Cell::num(row.mc_se)});
      }
      section.tables.push_back(std::move(table));
      bundle.sections.push_back(std::move(section));
      return emit(bundle, out);
    }

    if (*rep) {
      if (inputs.size() < 2) throw InputError("report needs at least two --input snapshots");
      if (!ccods.empty() && ccods.size() != inputs.size()) {
        throw InputError("give one --ccod per --input");
      }
      std::vector<Snapshot> snapshots;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        InputArgs args = in;
        args.path = inputs[i];
        if (!ccods.empty()) args.ccod = ccods[i];
        snapshots.push_back(load(args));
      }
      report::ReportBundle bundle;
      for (std::size_t i = 0; i < snapshots.size(); ++i) {
        bundle.metadata["snapshot_" + std::to_string(i + 1)] =
            snapshots[i].label + " (ccod " + report::format_number(snapshots[i].ccod) + ")";
      }
      for (std::size_t i = 1; i < snapshots.size(); ++i) {
        auto section = report::quantifier_comparison_section(
            summarize_all(snapshots[i - 1], snapshots[i]));
        if (snapshots.size() > 2) section.id += "_" + std::to_string(i);
        bundle.sections.push_back(std::move(section));
      }
      return emit(bundle, out);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (const auto* ingest = dynamic_cast<const io::IngestError*>(&e)) {
      for (const auto& d : ingest->diagnostics()) std::cerr << "  " << d.to_string() << "\n";
    }
    return kInputError;
  } catch (const ComputationError& e) {
    std::cerr << "computation: " << e.what() << "\n";
    return kComputationSignal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}
