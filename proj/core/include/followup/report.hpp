#pragma once

// Report bundles: metadata plus sections keyed by question id, each holding
// tables whose numbers carry a method tag. Rendered to versioned JSON,
// Markdown or a directory of CSV files; output is byte-deterministic.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "followup/quantifiers.hpp"

namespace followup::report {

inline constexpr const char* kSchemaVersion = "followup-report/1";

struct Cell {
  enum class Kind { NotComputed, Number, NotReached, Text };
  Kind kind = Kind::NotComputed;
  double number = 0.0;
  std::string text;

  static Cell num(double v);  // +inf maps to NotReached, NaN to NotComputed
  static Cell str(std::string s);
  static Cell not_computed() { return {}; }
  static Cell not_reached() { return {Kind::NotReached, 0.0, {}}; }
};

struct Table {
  std::string id;
  std::string title;
  std::string method;  // e.g. "km; ties=events-first; ci=log-log"
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Section {
  std::string id;  // "Q1" .. "Q9", "followup", "accrual", ...
  std::string title;
  std::vector<Table> tables;
  std::vector<std::string> notes;
  // Computation signals (e.g. a monotone likelihood) that the CLI reports
  // through its exit status.
  std::vector<std::string> signals;
};

struct ReportBundle {
  std::map<std::string, std::string> metadata;
  std::vector<Section> sections;

  // Section by id; an empty placeholder section when absent.
  const Section& section(const std::string& id) const;
};

enum class Format { Json, Markdown, CsvDir };

std::string render_json(const ReportBundle& bundle);
std::string render_markdown(const ReportBundle& bundle);
// Markdown for the requested sections only; unknown ids render as
// "not computed".
std::string render_markdown(const ReportBundle& bundle, const std::vector<std::string>& section_ids);
std::string render_table_csv(const Table& table);

// Writes to target (a file for json/markdown, a directory for csv-dir) and
// returns the written paths. Throws std::runtime_error on I/O failure.
std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle, Format format,
                                               const std::filesystem::path& target);

std::string format_number(double v);

// Table 4 layout: quantifier rows, one median column per snapshot (and the
// quartiles for a single snapshot).
Section quantifier_section(const QuantifierSummary& summary);
// Quantifier rows x (earlier, later, delta, delta %) per group.
Section quantifier_comparison_section(const QuantifierComparison& comparison);

}  // namespace followup::report
