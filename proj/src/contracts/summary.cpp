#include "blockiot/contracts/summary.hpp"

#include <algorithm>

namespace blockiot::contracts {

namespace {

constexpr TimestampMs kDayMs = 86'400'000;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

std::optional<double> numeric_value(const CanonicalObservation &o,
                                    const std::string &label) {
  if (label.empty()) {
    if (o.kind == MeasurementKind::Scalar)
      return std::get<ScalarValue>(o.value).magnitude;
    if (o.kind == MeasurementKind::EventState)
      return std::get<EventStateValue>(o.value).active ? 1.0 : 0.0;
    return std::nullopt;
  }
  if (o.kind != MeasurementKind::Vector) return std::nullopt;
  for (const auto &e : std::get<VectorValue>(o.value).elements)
    if (e.label == label) return e.magnitude;
  return std::nullopt;
}

Statistics compute_statistics(const std::vector<SeriesPoint> &points) {
  Statistics s;
  s.count = points.size();
  if (points.empty()) return s;
  double sum = 0;
  s.min = points[0].value;
  s.max = points[0].value;
  for (const auto &p : points) {
    sum += p.value;
    s.min = std::min(s.min, p.value);
    s.max = std::max(s.max, p.value);
  }
  s.mean = sum / static_cast<double>(points.size());
  s.latest = points.back().value; // points are time-sorted
  return s;
}

} // namespace

Json SummaryReport::to_json() const {
  Json series_json = Json::array();
  for (const auto &s : series) {
    Json points = Json::array();
    for (const auto &p : s.points)
      points.push_back(
          Json{{"time", format_timestamp(p.time)}, {"value", p.value}});
    series_json.push_back(Json{{"code", s.code}, {"points", std::move(points)}});
  }
  Json stats_json = Json::object();
  for (const auto &[code, st] : statistics) {
    Json entry = Json::object();
    for (const auto &name : requested_statistics) {
      if (name == "count") entry["count"] = st.count;
      if (st.count == 0) continue; // no values to summarize
      if (name == "min") entry["min"] = st.min;
      if (name == "max") entry["max"] = st.max;
      if (name == "mean") entry["mean"] = st.mean;
      if (name == "latest") entry["latest"] = st.latest;
    }
    stats_json[code] = std::move(entry);
  }
  Json j{{"patient_key", digest_hex(patient_key)},
         {"window_start", format_timestamp(window_start)},
         {"window_end", format_timestamp(window_end)},
         {"series", std::move(series_json)},
         {"statistics", std::move(stats_json)}};
  if (compliance)
    j["compliance"] = Json{{"taken", compliance->taken},
                           {"scheduled", compliance->scheduled},
                           {"ratio", compliance->ratio}};
  return j;
}

SummaryReport summarize(const std::vector<CanonicalObservation> &obs,
                        const ContractSpec &spec, TimestampMs window_start,
                        TimestampMs window_end,
                        const ComplianceReport *compliance) {
  if (spec.kind != ContractKind::Summarization)
    throw ConfigError({"summarize: wrong contract kind"});

  SummaryReport report;
  report.patient_key = spec.patient_key;
  report.window_start = window_start;
  report.window_end = window_end;
  report.requested_statistics = spec.summarization.statistics;

  for (const auto &requested : spec.summarization.codes) {
    std::string code = requested, label;
    if (auto dot = requested.find('.'); dot != std::string::npos) {
      code = requested.substr(0, dot);
      label = requested.substr(dot + 1);
    }
    Series series;
    series.code = requested;
    for (const auto &o : obs) {
      if (o.code_binding != code) continue;
      if (o.effective_time <= window_start || o.effective_time > window_end)
        continue;
      if (auto v = numeric_value(o, label))
        series.points.push_back({o.effective_time, *v});
    }
    std::sort(series.points.begin(), series.points.end(),
              [](const SeriesPoint &a, const SeriesPoint &b) {
                if (a.time != b.time) return a.time < b.time;
                return a.value < b.value;
              });
    report.statistics[requested] = compute_statistics(series.points);
    report.series.push_back(std::move(series));
  }

  if (compliance) {
    // Daily adherence counts for the compliance chart.
    std::map<std::int64_t, std::pair<int, int>> by_day; // taken, missed
    for (const auto &d : compliance->doses) {
      auto &cell = by_day[floor_div(d.scheduled_at, kDayMs)];
      (d.taken ? cell.first : cell.second)++;
    }
    Series taken{"doses-taken", {}}, missed{"doses-missed", {}};
    for (const auto &[day, counts] : by_day) {
      taken.points.push_back(
          {day * kDayMs, static_cast<double>(counts.first)});
      missed.points.push_back(
          {day * kDayMs, static_cast<double>(counts.second)});
    }
    report.statistics["doses-taken"] = compute_statistics(taken.points);
    report.statistics["doses-missed"] = compute_statistics(missed.points);
    report.series.push_back(std::move(taken));
    report.series.push_back(std::move(missed));
    report.compliance = ComplianceSummary{
        compliance->taken, compliance->scheduled, compliance->compliance_ratio};
  }

  return report;
}

} // namespace blockiot::contracts
