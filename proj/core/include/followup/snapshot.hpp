#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "followup/survival.hpp"

namespace followup {

enum class CensorReason { Event, AdminCensored, LostToFollowUp };

std::string_view to_token(CensorReason reason);  // "event" | "admin" | "ltfu"
std::optional<CensorReason> parse_reason(std::string_view token);

struct PatientRecord {
  std::string id;
  std::string arm;
  double entry = 0.0;  // calendar months from study start
  double time = 0.0;   // months from entry to terminal status
  CensorReason reason = CensorReason::AdminCensored;

  bool is_event() const { return reason == CensorReason::Event; }
  bool is_censored() const { return reason != CensorReason::Event; }
};

// All records consistent with one clinical cut-off date (ccod), in calendar
// months.
struct Snapshot {
  double ccod = 0.0;
  std::vector<PatientRecord> patients;
  std::string label;

  // Throws InputError naming the first offending record.
  void validate() const;

  // Distinct arm labels in first-appearance order.
  std::vector<std::string> arms() const;

  // Patients of one arm, or all patients when arm is empty.
  std::vector<PatientRecord> select(const std::optional<std::string>& arm) const;

  // (time, event) view of the primary endpoint.
  ObservedSample observed(const std::optional<std::string>& arm = std::nullopt) const;
};

}  // namespace followup
