#pragma once

// Snapshot CSV ingestion/export and the simulation config file.
//
// Input CSV (header required, column order free):
//   patient_id,arm,entry_time,time,status
// or, in date mode,
//   patient_id,arm,entry_date,time,status
// with status one of event|admin|ltfu. Dates are ISO-8601 (YYYY-MM-DD);
// entry months are counted from the earliest entry date and the CCOD is
// given separately. Day-based values are converted with 30.4375 days/month.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "followup/error.hpp"
#include "followup/sim.hpp"
#include "followup/snapshot.hpp"

namespace followup::io {

enum class TimeUnit { Months, Days };

struct IngestOptions {
  std::optional<double> ccod;             // in `unit`; default max(entry + time)
  std::optional<std::string> ccod_date;   // required in date mode
  TimeUnit unit = TimeUnit::Months;       // applies to time and entry_time
  std::string label;
  // When false, rejected rows are dropped and reported; otherwise any
  // rejected row raises IngestError.
  bool strict = true;
};

struct Diagnostic {
  std::size_t row = 0;  // 1-based data row; 0 for header/file-level problems
  std::string column;
  std::string message;

  std::string to_string() const;
};

class IngestError : public InputError {
 public:
  explicit IngestError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

struct IngestResult {
  Snapshot snapshot;
  std::vector<Diagnostic> diagnostics;
};

IngestResult ingest_csv(std::istream& in, const IngestOptions& options = {});
IngestResult ingest_csv_file(const std::string& path, const IngestOptions& options = {});

// Writes patient_id,arm,entry_time,time,status with round-trip precision.
void write_snapshot_csv(std::ostream& out, const Snapshot& snapshot);

// Days since 1970-01-01 for an ISO-8601 date; nullopt when malformed.
std::optional<long> parse_iso_date(const std::string& text);

// Splits one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line);

// SimConfig <-> JSON text. Unknown keys are rejected.
SimConfig parse_sim_config(const std::string& json_text);
SimConfig load_sim_config(const std::string& path);
std::string sim_config_to_json(const SimConfig& config);

}  // namespace followup::io
