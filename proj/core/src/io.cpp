#include "followup/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace followup::io {
namespace {

using nlohmann::json;

constexpr double kConsistencySlack = 1e-9;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_number(const std::string& text) {
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RawRow {
  std::size_t row = 0;
  std::string id;
  std::string arm;
  std::optional<double> entry;      // months mode
  std::optional<long> entry_day;    // date mode
  double time = 0.0;
  CensorReason reason = CensorReason::Event;
};

}  // namespace

std::string Diagnostic::to_string() const {
  std::string out = row == 0 ? std::string("header") : "row " + std::to_string(row);
  if (!column.empty()) out += ", column '" + column + "'";
  return out + ": " + message;
}

IngestError::IngestError(std::vector<Diagnostic> diagnostics)
    : InputError([&] {
        std::string msg = "invalid input";
        for (const auto& d : diagnostics) msg += "\n  " + d.to_string();
        return msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(trim(field));
  return fields;
}

std::optional<long> parse_iso_date(const std::string& text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

IngestResult ingest_csv(std::istream& in, const IngestOptions& options) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError({{0, "", "missing header row"}});
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);

  std::map<std::string, std::size_t> column;
  const auto header = split_csv_line(line);
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;

  std::vector<Diagnostic> header_problems;
  for (const char* required : {"patient_id", "arm", "time", "status"}) {
    if (!column.count(required)) header_problems.push_back({0, required, "missing column"});
  }
  const bool date_mode = column.count("entry_date") > 0;
  if (!date_mode && !column.count("entry_time")) {
    header_problems.push_back({0, "entry_time", "missing column (or entry_date)"});
  }
  if (date_mode && column.count("entry_time")) {
    header_problems.push_back({0, "entry_date", "give either entry_time or entry_date, not both"});
  }
  std::optional<long> ccod_day;
  if (date_mode) {
    if (!options.ccod_date) {
      header_problems.push_back({0, "entry_date", "date mode requires a CCOD date"});
    } else if (!(ccod_day = parse_iso_date(*options.ccod_date))) {
      header_problems.push_back({0, "", "unparseable CCOD date '" + *options.ccod_date + "'"});
    }
  }
  if (!header_problems.empty()) throw IngestError(std::move(header_problems));

  const double unit = options.unit == TimeUnit::Days ? 1.0 / kDaysPerMonth : 1.0;
  std::vector<Diagnostic> diagnostics;
  std::vector<RawRow> rows;
  std::set<std::string> seen_ids;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      diagnostics.push_back({row_number, "",
                             "expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size())});
      continue;
    }
    const auto field = [&](const char* name) { return fields[column.at(name)]; };
    RawRow raw;
    raw.row = row_number;
    raw.id = field("patient_id");
    raw.arm = field("arm");
    bool ok = true;
    auto reject = [&](const char* col, std::string msg) {
      diagnostics.push_back({row_number, col, std::move(msg)});
      ok = false;
    };
    if (raw.id.empty()) reject("patient_id", "empty patient_id");
    else if (!seen_ids.insert(raw.id).second) reject("patient_id", "duplicate patient_id");
    if (raw.arm.empty()) reject("arm", "empty arm");

    if (date_mode) {
      raw.entry_day = parse_iso_date(field("entry_date"));
      if (!raw.entry_day) reject("entry_date", "unparseable date '" + field("entry_date") + "'");
    } else {
      raw.entry = parse_number(field("entry_time"));
      if (!raw.entry || *raw.entry < 0.0) {
        reject("entry_time", "entry_time must be a number >= 0");
      } else {
        *raw.entry *= unit;
      }
    }
    const auto time = parse_number(field("time"));
    if (!time || *time < 0.0) {
      reject("time", "time must be a number >= 0");
    } else {
      raw.time = *time * unit;
    }
    const auto reason = parse_reason(field("status"));
    if (!reason) {
      reject("status", "unknown status '" + field("status") + "'");
    } else {
      raw.reason = *reason;
    }
    if (ok) rows.push_back(std::move(raw));
  }

  Snapshot snapshot;
  snapshot.label = options.label;
  std::optional<long> origin;
  if (date_mode) {
    for (const auto& r : rows) origin = std::min(origin.value_or(*r.entry_day), *r.entry_day);
    for (auto& r : rows) {
      r.entry = static_cast<double>(*r.entry_day - *origin) / kDaysPerMonth;
    }
    if (origin) snapshot.ccod = static_cast<double>(*ccod_day - *origin) / kDaysPerMonth;
    if (origin && *ccod_day < *origin) {
      diagnostics.push_back({0, "", "CCOD precedes the earliest entry date"});
    }
  } else if (options.ccod) {
    snapshot.ccod = *options.ccod * unit;
  } else {
    for (const auto& r : rows) snapshot.ccod = std::max(snapshot.ccod, *r.entry + r.time);
  }

  for (const auto& r : rows) {
    if (*r.entry + r.time > snapshot.ccod + kConsistencySlack * std::max(1.0, snapshot.ccod)) {
      diagnostics.push_back({r.row, "time", "entry + time exceeds CCOD"});
      continue;
    }
    snapshot.patients.push_back({r.id, r.arm, *r.entry, r.time, r.reason});
  }
  std::sort(diagnostics.begin(), diagnostics.end(),
            [](const Diagnostic& a, const Diagnostic& b) { return a.row < b.row; });

  if (options.strict && !diagnostics.empty()) throw IngestError(std::move(diagnostics));
  if (snapshot.patients.empty()) {
    diagnostics.push_back({0, "", "no valid patient rows"});
    throw IngestError(std::move(diagnostics));
  }
  snapshot.validate();
  return {std::move(snapshot), std::move(diagnostics)};
}

IngestResult ingest_csv_file(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  auto opts = options;
  if (opts.label.empty()) opts.label = path;
  return ingest_csv(in, opts);
}

void write_snapshot_csv(std::ostream& out, const Snapshot& snapshot) {
  out << "patient_id,arm,entry_time,time,status\n";
  for (const auto& p : snapshot.patients) {
    out << p.id << ',' << p.arm << ',' << format_double(p.entry) << ','
        << format_double(p.time) << ',' << to_token(p.reason) << '\n';
  }
}

SimConfig parse_sim_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("config: top level must be an object");

  static const std::set<std::string> known = {"base_rate",    "median_months", "hr_schedule",
                                              "ltfu",         "accrual",       "randomization",
                                              "cutoff"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) throw InputError("config: unknown key '" + key + "'");
  }

  SimConfig config;
  try {
    if (doc.contains("base_rate") && doc.contains("median_months")) {
      throw InputError("config: give base_rate or median_months, not both");
    }
    if (doc.contains("base_rate")) config.base_rate = doc["base_rate"].get<double>();
    if (doc.contains("median_months")) {
      config.base_rate = SimConfig::rate_from_median(doc["median_months"].get<double>());
    }
    if (doc.contains("hr_schedule")) {
      config.hr_schedule.clear();
      for (const auto& piece : doc["hr_schedule"]) {
        config.hr_schedule.push_back(
            {piece.at("start").get<double>(), piece.at("hr").get<double>()});
      }
    }
    if (doc.contains("ltfu")) {
      const auto& l = doc["ltfu"];
      config.ltfu_probability = l.value("probability", config.ltfu_probability);
      config.ltfu_horizon = l.value("at_month", config.ltfu_horizon);
    }
    if (doc.contains("accrual")) {
      const auto& a = doc["accrual"];
      config.ramp_months = a.value("ramp_months", config.ramp_months);
      config.ramp_rate = a.value("ramp_rate", config.ramp_rate);
      config.accrual_rate = a.value("rate", config.accrual_rate);
      config.max_patients = a.value("max_patients", config.max_patients);
    }
    if (doc.contains("randomization")) {
      const auto& r = doc["randomization"];
      config.control_ratio = r.at("control").get<std::size_t>();
      config.treatment_ratio = r.at("treatment").get<std::size_t>();
    }
    if (doc.contains("cutoff")) {
      const auto& c = doc["cutoff"];
      if (c.contains("events") == c.contains("calendar")) {
        throw InputError("config: cutoff needs exactly one of events or calendar");
      }
      if (c.contains("events")) {
        config.cutoff = {Cutoff::Kind::Events, c["events"].get<std::size_t>(), 0.0};
      } else {
        config.cutoff = {Cutoff::Kind::Calendar, 0, c["calendar"].get<double>()};
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  config.validate();
  return config;
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_sim_config(buffer.str());
}

std::string sim_config_to_json(const SimConfig& config) {
  json doc;
  doc["base_rate"] = config.base_rate;
  doc["hr_schedule"] = json::array();
  for (const auto& p : config.hr_schedule) {
    doc["hr_schedule"].push_back({{"start", p.start}, {"hr", p.value}});
  }
  doc["ltfu"] = {{"probability", config.ltfu_probability}, {"at_month", config.ltfu_horizon}};
  doc["accrual"] = {{"ramp_months", config.ramp_months},
                    {"ramp_rate", config.ramp_rate},
                    {"rate", config.accrual_rate},
                    {"max_patients", config.max_patients}};
  doc["randomization"] = {{"control", config.control_ratio},
                          {"treatment", config.treatment_ratio}};
  if (config.cutoff.kind == Cutoff::Kind::Events) {
    doc["cutoff"] = {{"events", config.cutoff.events}};
  } else {
    doc["cutoff"] = {{"calendar", config.cutoff.calendar}};
  }
  return doc.dump(2);
}

}  // namespace followup::io
