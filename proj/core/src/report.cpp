#include "followup/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace followup::report {
namespace {

using nlohmann::ordered_json;

constexpr const char* kNotReached = "NR";
constexpr const char* kNotComputed = "not computed";

std::string cell_text(const Cell& c) {
  switch (c.kind) {
    case Cell::Kind::NotComputed:
      return kNotComputed;
    case Cell::Kind::Number:
      return format_number(c.number);
    case Cell::Kind::NotReached:
      return kNotReached;
    case Cell::Kind::Text:
      return c.text;
  }
  return kNotComputed;
}

ordered_json cell_json(const Cell& c) {
  switch (c.kind) {
    case Cell::Kind::Number:
      return c.number;
    case Cell::Kind::NotReached:
      return kNotReached;
    case Cell::Kind::Text:
      return c.text;
    case Cell::Kind::NotComputed:
      break;
  }
  return kNotComputed;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '|') out += '\\';
    out += ch;
  }
  return out;
}

void render_section_md(std::ostringstream& out, const Section& section) {
  out << "## " << section.id << ": " << section.title << "\n\n";
  if (section.tables.empty() && section.notes.empty()) out << "_" << kNotComputed << "_\n\n";
  for (const auto& note : section.notes) out << "- " << note << "\n";
  for (const auto& signal : section.signals) out << "- **signal**: " << signal << "\n";
  if (!section.notes.empty() || !section.signals.empty()) out << "\n";
  for (const auto& table : section.tables) {
    out << "### " << table.title << "\n\n";
    if (!table.method.empty()) out << "Method: `" << table.method << "`\n\n";
    out << "|";
    for (const auto& col : table.columns) out << " " << md_escape(col) << " |";
    out << "\n|";
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << " --- |";
    out << "\n";
    for (const auto& row : table.rows) {
      out << "|";
      for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out << " " << md_escape(i < row.size() ? cell_text(row[i]) : kNotComputed) << " |";
      }
      out << "\n";
    }
    out << "\n";
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Cell summary_cell(const std::optional<DistributionSummary>& s, double DistributionSummary::*field) {
  return s ? Cell::num((*s).*field) : Cell::not_computed();
}

Cell optional_cell(const std::optional<double>& v) {
  return v ? Cell::num(*v) : Cell::not_computed();
}

}  // namespace

Cell Cell::num(double v) {
  if (std::isnan(v)) return not_computed();
  if (std::isinf(v) && v > 0) return not_reached();
  return {Kind::Number, v, {}};
}

Cell Cell::str(std::string s) { return {Kind::Text, 0.0, std::move(s)}; }

const Section& ReportBundle::section(const std::string& id) const {
  for (const auto& s : sections) {
    if (s.id == id) return s;
  }
  static const Section empty;
  return empty;
}

std::string format_number(double v) {
  char buf[40];
  if (std::isnan(v)) return kNotComputed;
  if (std::isinf(v)) return v > 0 ? kNotReached : "-inf";
  if (v == std::floor(v) && std::fabs(v) < 1e9) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.4g", v);
  }
  return buf;
}

std::string render_json(const ReportBundle& bundle) {
  ordered_json doc;
  doc["schema"] = kSchemaVersion;
  doc["metadata"] = ordered_json::object();
  for (const auto& [k, v] : bundle.metadata) doc["metadata"][k] = v;
  doc["sections"] = ordered_json::array();
  for (const auto& section : bundle.sections) {
    ordered_json s;
    s["id"] = section.id;
    s["title"] = section.title;
    s["notes"] = section.notes;
    s["signals"] = section.signals;
    s["tables"] = ordered_json::array();
    for (const auto& table : section.tables) {
      ordered_json t;
      t["id"] = table.id;
      t["title"] = table.title;
      t["method"] = table.method;
      t["columns"] = table.columns;
      t["rows"] = ordered_json::array();
      for (const auto& row : table.rows) {
        ordered_json r = ordered_json::array();
        for (const auto& c : row) r.push_back(cell_json(c));
        t["rows"].push_back(std::move(r));
      }
      s["tables"].push_back(std::move(t));
    }
    doc["sections"].push_back(std::move(s));
  }
  return doc.dump(2) + "\n";
}

std::string render_markdown(const ReportBundle& bundle) {
  std::vector<std::string> ids;
  for (const auto& s : bundle.sections) ids.push_back(s.id);
  return render_markdown(bundle, ids);
}

std::string render_markdown(const ReportBundle& bundle, const std::vector<std::string>& section_ids) {
  std::ostringstream out;
  out << "# Follow-up report\n\n";
  for (const auto& [k, v] : bundle.metadata) out << "- **" << k << "**: " << v << "\n";
  out << "- **schema**: " << kSchemaVersion << "\n\n";
  for (const auto& id : section_ids) {
    const auto& section = bundle.section(id);
    if (section.id.empty()) {
      Section missing;
      missing.id = id;
      missing.title = kNotComputed;
      render_section_md(out, missing);
    } else {
      render_section_md(out, section);
    }
  }
  return out.str();
}

std::string render_table_csv(const Table& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << csv_escape(table.columns[i]);
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      const auto text = i < row.size() ? cell_text(row[i]) : kNotComputed;
      out << (i ? "," : "") << csv_escape(text);
    }
    out << "\n";
  }
  return out.str();
}

std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle, Format format,
                                               const std::filesystem::path& target) {
  std::vector<std::filesystem::path> written;
  switch (format) {
    case Format::Json:
      write_file(target, render_json(bundle));
      written.push_back(target);
      break;
    case Format::Markdown:
      write_file(target, render_markdown(bundle));
      written.push_back(target);
      break;
    case Format::CsvDir: {
      std::error_code ec;
      std::filesystem::create_directories(target, ec);
      if (ec) throw std::runtime_error("cannot create '" + target.string() + "': " + ec.message());
      std::ostringstream meta;
      meta << "key,value\nschema," << kSchemaVersion << "\n";
      for (const auto& [k, v] : bundle.metadata) meta << csv_escape(k) << "," << csv_escape(v) << "\n";
      write_file(target / "metadata.csv", meta.str());
      written.push_back(target / "metadata.csv");
      for (const auto& section : bundle.sections) {
        for (const auto& table : section.tables) {
          auto path = target / (section.id + "_" + table.id + ".csv");
          write_file(path, render_table_csv(table));
          written.push_back(path);
        }
      }
      break;
    }
  }
  return written;
}

Section quantifier_section(const QuantifierSummary& summary) {
  Section section;
  section.id = "followup";
  section.title = "Quantifications of follow-up (months)";
  for (std::size_t g = 0; g < summary.groups.size(); ++g) {
    Table table;
    table.id = "quantifiers_" + summary.groups[g];
    table.title = "Follow-up quantifiers, " + summary.groups[g];
    table.method = "median/quartiles: type-7 sample quantiles (plain), KM quantiles (reverse-km), "
                   "inf{t: pi(t) < p} (korn)";
    table.columns = {"quantifier", "description", "estimation", "median", "q25", "q75",
                     "min", "max", "note"};
    for (std::size_t q = 0; q < kAllQuantifiers.size(); ++q) {
      const auto id = kAllQuantifiers[q];
      const auto& cell = summary.cells[g][q];
      const auto estimation = id == QuantifierId::TimeToCensoring         ? Estimation::ReverseKm
                              : id == QuantifierId::KornPotentialFollowUp ? Estimation::KornProduct
                                                                          : Estimation::PlainEmpirical;
      table.rows.push_back({Cell::str(std::string(short_name(id))),
                            Cell::str(std::string(description(id))),
                            Cell::str(std::string(to_string(estimation))),
                            summary_cell(cell.summary, &DistributionSummary::median),
                            summary_cell(cell.summary, &DistributionSummary::q25),
                            summary_cell(cell.summary, &DistributionSummary::q75),
                            summary_cell(cell.summary, &DistributionSummary::min),
                            summary_cell(cell.summary, &DistributionSummary::max),
                            Cell::str(cell.note)});
    }
    section.tables.push_back(std::move(table));
  }
  return section;
}

Section quantifier_comparison_section(const QuantifierComparison& comparison) {
  Section section;
  section.id = "followup";
  section.title = "Quantifications of follow-up (months), two snapshots";
  const auto& a = comparison.earlier.snapshot_label;
  const auto& b = comparison.later.snapshot_label;
  for (std::size_t g = 0; g < comparison.groups.size(); ++g) {
    Table table;
    table.id = "quantifiers_delta_" + comparison.groups[g];
    table.title = "Follow-up quantifier medians, " + comparison.groups[g];
    table.method = "delta = later - earlier; delta % relative to earlier";
    table.columns = {"quantifier", "description", a.empty() ? "earlier" : a,
                     b.empty() ? "later" : b, "delta", "delta %"};
    for (std::size_t q = 0; q < kAllQuantifiers.size(); ++q) {
      const auto id = kAllQuantifiers[q];
      const auto& d = comparison.medians[g][q];
      table.rows.push_back({Cell::str(std::string(short_name(id))),
                            Cell::str(std::string(description(id))), optional_cell(d.earlier),
                            optional_cell(d.later), optional_cell(d.delta),
                            optional_cell(d.delta_percent)});
    }
    section.tables.push_back(std::move(table));
  }
  return section;
}

}  // namespace followup::report
