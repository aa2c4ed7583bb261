#include "followup/snapshot.hpp"

#include <algorithm>
#include <cmath>

#include "followup/error.hpp"

namespace followup {
namespace {

// Tolerance for entry + time <= ccod; inputs often carry rounded decimals.
constexpr double kConsistencySlack = 1e-9;

}  // namespace

std::string_view to_token(CensorReason reason) {
  switch (reason) {
    case CensorReason::Event:
      return "event";
    case CensorReason::AdminCensored:
      return "admin";
    case CensorReason::LostToFollowUp:
      return "ltfu";
  }
  return "unknown";
}

std::optional<CensorReason> parse_reason(std::string_view token) {
  if (token == "event") return CensorReason::Event;
  if (token == "admin") return CensorReason::AdminCensored;
  if (token == "ltfu") return CensorReason::LostToFollowUp;
  return std::nullopt;
}

void Snapshot::validate() const {
  if (!std::isfinite(ccod)) throw InputError("ccod must be finite");
  for (const auto& p : patients) {
    if (p.arm.empty()) throw InputError("patient " + p.id + ": missing arm label");
    if (!std::isfinite(p.entry) || p.entry < 0.0) {
      throw InputError("patient " + p.id + ": entry must be finite and >= 0");
    }
    if (!std::isfinite(p.time) || p.time < 0.0) {
      throw InputError("patient " + p.id + ": time must be finite and >= 0");
    }
    if (p.entry + p.time > ccod + kConsistencySlack * std::max(1.0, ccod)) {
      throw InputError("patient " + p.id + ": entry + time exceeds CCOD");
    }
  }
}

std::vector<std::string> Snapshot::arms() const {
  std::vector<std::string> out;
  for (const auto& p : patients) {
    if (std::find(out.begin(), out.end(), p.arm) == out.end()) out.push_back(p.arm);
  }
  return out;
}

std::vector<PatientRecord> Snapshot::select(const std::optional<std::string>& arm) const {
  if (!arm) return patients;
  std::vector<PatientRecord> out;
  for (const auto& p : patients) {
    if (p.arm == *arm) out.push_back(p);
  }
  if (out.empty()) throw InputError("no patients in arm '" + *arm + "'");
  return out;
}

ObservedSample Snapshot::observed(const std::optional<std::string>& arm) const {
  ObservedSample out;
  for (const auto& p : select(arm)) out.push_back({p.time, p.is_event()});
  return out;
}

}  // namespace followup
