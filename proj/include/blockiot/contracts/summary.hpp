#pragma once

#include <map>

#include "blockiot/contracts/engine.hpp"

namespace blockiot::contracts {

struct SeriesPoint {
  TimestampMs time = 0;
  double value = 0;
  bool operator==(const SeriesPoint &) const = default;
};

struct Series {
  std::string code;
  std::vector<SeriesPoint> points; // sorted by time
};

struct Statistics {
  std::size_t count = 0;
  double min = 0;
  double max = 0;
  double mean = 0;
  double latest = 0;
};

struct ComplianceSummary {
  int taken = 0;
  int scheduled = 0;
  double ratio = 1.0;
};

// The provider-facing chart artifact: per-code point series plus summary
// statistics over a window, stored whole in the CAS.
struct SummaryReport {
  PatientKey patient_key{};
  TimestampMs window_start = 0; // exclusive
  TimestampMs window_end = 0;   // inclusive
  std::vector<Series> series;
  std::map<std::string, Statistics> statistics;
  std::vector<std::string> requested_statistics;
  std::optional<ComplianceSummary> compliance;

  Json to_json() const;
};

// One series per requested code. "code.label" selects one element of a
// vector reading; a bare code reads scalars (magnitude) and event states
// (1/0). When a compliance report is supplied, daily doses-taken and
// doses-missed series are appended for the adherence chart.
SummaryReport summarize(const std::vector<CanonicalObservation> &obs,
                        const ContractSpec &spec, TimestampMs window_start,
                        TimestampMs window_end,
                        const ComplianceReport *compliance = nullptr);

} // namespace blockiot::contracts
