#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "blockiot/contracts/access.hpp"
#include "blockiot/contracts/summary.hpp"

using namespace blockiot;
using namespace blockiot::contracts;

namespace {

const PatientKey kPatient = sha256("pat|one|1980-01-01");
constexpr TimestampMs kDay = 86'400'000;

// Distinct provenance per call unless content repeats.
CanonicalObservation make_obs(const std::string &code, MeasurementValue value,
                              TimestampMs at, const std::string &salt = "") {
  CanonicalObservation o;
  o.subject = kPatient;
  o.device = {"P1", "D1", 1};
  o.effective_time = at;
  o.kind = kind_of(value);
  o.value = std::move(value);
  o.code_binding = code;
  o.provenance =
      cas::ContentAddress::of(code + "|" + std::to_string(at) + "|" + salt);
  return o;
}

CanonicalObservation opening(TimestampMs at, const std::string &salt = "") {
  return make_obs("bottle-opened", EventStateValue{"bottle-opened", true}, at,
                  salt);
}

ContractSpec compliance_spec(std::vector<int> times_minutes,
                             int tolerance_min = 60, double threshold = 0.8) {
  ContractSpec s;
  s.kind = ContractKind::DrugCompliance;
  s.patient_key = kPatient;
  s.compliance.times_minutes = std::move(times_minutes);
  s.compliance.tolerance_minutes = tolerance_min;
  s.compliance.alert_threshold = threshold;
  return s;
}

ContractSpec adverse_spec(double min_bpm = 50, double max_bpm = 120,
                          bool flag_irregular = true) {
  ContractSpec s;
  s.kind = ContractKind::AdverseCondition;
  s.patient_key = kPatient;
  s.adverse.min_bpm = min_bpm;
  s.adverse.max_bpm = max_bpm;
  s.adverse.flag_irregular = flag_irregular;
  return s;
}

// Independent restatement of the documented matching rule, kept deliberately
// naive: walk scheduled doses chronologically, scan all openings, take the
// nearest unclaimed one within tolerance, earlier opening on distance ties.
std::vector<bool> oracle_match(const std::vector<TimestampMs> &schedule,
                               std::vector<std::pair<TimestampMs, std::string>>
                                   openings, // (time, address hex)
                               TimestampMs tol) {
  std::sort(openings.begin(), openings.end());
  std::vector<bool> claimed(openings.size(), false);
  std::vector<bool> taken;
  for (TimestampMs dose : schedule) {
    long best = -1;
    TimestampMs best_dist = tol + 1;
    for (std::size_t i = 0; i < openings.size(); ++i) {
      if (claimed[i]) continue;
      TimestampMs d = openings[i].first > dose ? openings[i].first - dose
                                               : dose - openings[i].first;
      if (d <= tol && d < best_dist) {
        best = static_cast<long>(i);
        best_dist = d;
      }
    }
    if (best >= 0) claimed[static_cast<std::size_t>(best)] = true;
    taken.push_back(best >= 0);
  }
  return taken;
}

} // namespace

TEST_CASE("contract spec parsing") {
  Json file{
      {"patient_key", digest_hex(kPatient)},
      {"contracts",
       Json::array(
           {Json{{"contract_kind", "drug_compliance"},
                 {"parameters",
                  {{"schedule", Json::array({"08:00", "20:00"})},
                   {"tolerance_minutes", 60},
                   {"alert_threshold", 0.8}}}},
            Json{{"contract_kind", "adverse_condition"},
                 {"parameters", {{"min_bpm", 50}, {"max_bpm", 120}}}},
            Json{{"contract_kind", "emergency_alert"},
                 {"parameters",
                  {{"contacts", Json::array({"oncall@clinic.example"})}}}},
            Json{{"contract_kind", "summarization"},
                 {"parameters",
                  {{"codes", Json::array({"blood-pressure.systolic"})}}}}})}};
  auto specs = load_contract_file(canonical_dump(file));
  REQUIRE(specs.size() == 4);
  CHECK(specs[0].kind == ContractKind::DrugCompliance);
  CHECK(specs[0].patient_key == kPatient);
  CHECK(specs[0].compliance.times_minutes == std::vector<int>{480, 1200});
  CHECK(specs[2].emergency.contacts.size() == 1);
  CHECK(specs[3].summarization.statistics.size() == 5); // default list

  SUBCASE("bad schedule time") {
    file["contracts"][0]["parameters"]["schedule"][0] = "25:00";
    CHECK_THROWS_AS(load_contract_file(canonical_dump(file)), ConfigError);
  }
  SUBCASE("threshold out of range") {
    file["contracts"][0]["parameters"]["alert_threshold"] = 1.5;
    CHECK_THROWS_AS(load_contract_file(canonical_dump(file)), ConfigError);
  }
  SUBCASE("unknown contract kind") {
    file["contracts"][1]["contract_kind"] = "mystery";
    CHECK_THROWS_AS(load_contract_file(canonical_dump(file)), ConfigError);
  }
  SUBCASE("all failures reported together") {
    file["contracts"][0]["parameters"]["schedule"] = Json::array();
    file["contracts"][2]["parameters"].erase("contacts");
    try {
      load_contract_file(canonical_dump(file));
      FAIL("expected ConfigError");
    } catch (const ConfigError &e) {
      CHECK(e.paths.size() == 2);
    }
  }
  SUBCASE("round trip") {
    auto again = contract_spec_from_json(contract_spec_to_json(specs[0]));
    CHECK(canonical_dump(contract_spec_to_json(again)) ==
          canonical_dump(contract_spec_to_json(specs[0])));
  }
}

TEST_CASE("access control") {
  AccessTable table;
  Principal provider{"provider:dr-a", std::nullopt};
  Principal patient{"patient:self", kPatient};
  PatientKey other = sha256("someone|else|1990-01-01");

  CHECK_FALSE(check_access(table, provider, kPatient, AccessAction::Read));
  table.grant(kPatient, provider.id, AccessAction::Read);
  CHECK(check_access(table, provider, kPatient, AccessAction::Read));
  CHECK_FALSE(check_access(table, provider, kPatient, AccessAction::Write));
  CHECK_FALSE(check_access(table, provider, other, AccessAction::Read));

  table.revoke(kPatient, provider.id, AccessAction::Read);
  CHECK_FALSE(check_access(table, provider, kPatient, AccessAction::Read));

  // Patients always reach their own record, grants or not.
  CHECK(check_access(table, patient, kPatient, AccessAction::Read));
  CHECK(check_access(table, patient, kPatient, AccessAction::Publish));
  CHECK_FALSE(check_access(table, patient, other, AccessAction::Read));

  // Serialized form is sorted triples.
  table.grant(kPatient, "b", AccessAction::Write);
  table.grant(kPatient, "a", AccessAction::Read);
  auto j = table.to_json();
  REQUIRE(j.size() == 2);
  CHECK(j[0][1] == "a");
  CHECK(j[1][1] == "b");
}

TEST_CASE("drug compliance: the 11-of-14 week") {
  // 7 full days, doses 08:00 and 20:00, 11 openings near schedule and the
  // rest missed.
  TimestampMs start = 20'000 * kDay; // a UTC midnight
  TimestampMs end = start + 7 * kDay;
  auto spec = compliance_spec({480, 1200});

  std::vector<CanonicalObservation> obs;
  int made = 0;
  for (int day = 0; day < 7; ++day) {
    for (int dose = 0; dose < 2; ++dose) {
      if (made >= 11) break;
      TimestampMs sched =
          start + day * kDay + (dose == 0 ? 480 : 1200) * 60'000LL;
      obs.push_back(opening(sched + (made % 3 - 1) * 15 * 60'000LL,
                            std::to_string(made)));
      ++made;
    }
  }
  REQUIRE(made == 11);

  auto [report, alert] = eval_drug_compliance(obs, spec, start, end);
  CHECK(report.scheduled == 14);
  CHECK(report.taken == 11);
  CHECK(report.compliance_ratio == doctest::Approx(11.0 / 14.0).epsilon(1e-15));
  CHECK(report.compliance_ratio == 11.0 / 14.0); // exact rational
  REQUIRE(alert.has_value());
  CHECK(alert->severity == Severity::Alert);
  CHECK(alert->contract_kind == ContractKind::DrugCompliance);
  CHECK(alert->message.find("11/14") != std::string::npos);
  CHECK_FALSE(alert->triggering.empty());
}

TEST_CASE("drug compliance corner cases") {
  auto spec = compliance_spec({480, 1200});

  SUBCASE("zero scheduled doses is vacuous compliance") {
    TimestampMs start = 20'000 * kDay + 9 * 3'600'000; // 09:00
    TimestampMs end = start + 3'600'000;               // 10:00, no dose inside
    auto [report, alert] = eval_drug_compliance({}, spec, start, end);
    CHECK(report.scheduled == 0);
    CHECK(report.compliance_ratio == 1.0);
    CHECK_FALSE(alert.has_value());
  }

  SUBCASE("all doses matched, no alert") {
    TimestampMs start = 20'000 * kDay;
    TimestampMs end = start + 2 * kDay;
    std::vector<CanonicalObservation> obs;
    int n = 0;
    for (int day = 0; day < 2; ++day)
      for (int minutes : {480, 1200})
        obs.push_back(opening(start + day * kDay + minutes * 60'000LL,
                              std::to_string(n++)));
    auto [report, alert] = eval_drug_compliance(obs, spec, start, end);
    CHECK(report.scheduled == 4);
    CHECK(report.taken == 4);
    CHECK(report.compliance_ratio == 1.0);
    CHECK_FALSE(alert.has_value());
  }

  SUBCASE("window boundaries are (start, end]") {
    TimestampMs start = 20'000 * kDay + 480 * 60'000LL; // exactly 08:00
    TimestampMs end = start + kDay;                     // next day 08:00
    auto [report, alert] = eval_drug_compliance({}, spec, start, end);
    // 08:00 at start excluded, 20:00 day one and 08:00 day two included.
    CHECK(report.scheduled == 2);
  }

  SUBCASE("inactive opening events do not count") {
    TimestampMs start = 20'000 * kDay;
    TimestampMs end = start + kDay;
    auto closed = make_obs("bottle-opened",
                           EventStateValue{"bottle-opened", false},
                           start + 480 * 60'000LL);
    auto [report, alert] = eval_drug_compliance({closed}, spec, start, end,
                                                std::nullopt);
    CHECK(report.taken == 0);
    REQUIRE(alert.has_value()); // 0/2 < 0.8, the closed event is evidence
    CHECK(alert->triggering.size() == 1);
  }

  SUBCASE("empty window falls back to supplied evidence") {
    TimestampMs start = 20'000 * kDay;
    TimestampMs end = start + kDay;
    auto evidence = cas::ContentAddress::of("batch doc");
    auto [report, alert] =
        eval_drug_compliance({}, spec, start, end, evidence);
    CHECK(report.taken == 0);
    REQUIRE(alert.has_value());
    REQUIRE(alert->triggering.size() == 1);
    CHECK(alert->triggering[0] == evidence);
    CHECK(alert->emitted_at == end);
  }

  SUBCASE("one opening cannot satisfy two doses") {
    auto tight = compliance_spec({480, 490}, 60, 0.0); // threshold 0: no alert
    TimestampMs start = 20'000 * kDay;
    TimestampMs end = start + kDay;
    auto [report, alert] = eval_drug_compliance(
        {opening(start + 485 * 60'000LL)}, tight, start, end);
    CHECK(report.scheduled == 2);
    CHECK(report.taken == 1);
    // Greedy by schedule order: the earlier dose claims it.
    CHECK(report.doses[0].taken);
    CHECK_FALSE(report.doses[1].taken);
  }

  SUBCASE("malformed spec is a config error") {
    auto wrong = adverse_spec();
    CHECK_THROWS_AS(
        eval_drug_compliance({}, wrong, 0, kDay), ConfigError);
    auto empty_sched = compliance_spec({});
    CHECK_THROWS_AS(eval_drug_compliance({}, empty_sched, 0, kDay),
                    ConfigError);
  }
}

TEST_CASE("drug compliance matches the brute-force oracle") {
  std::mt19937_64 rng(0xd05e);
  std::uniform_int_distribution<int> days_dist(1, 31);
  std::uniform_int_distribution<int> doses_dist(1, 4);
  std::uniform_int_distribution<int> tod(0, 1439);
  std::uniform_int_distribution<int> tol_dist(5, 240);

  for (int iter = 0; iter < 2'000; ++iter) {
    int days = days_dist(rng);
    int doses_per_day = doses_dist(rng);
    std::set<int> times;
    while (static_cast<int>(times.size()) < doses_per_day)
      times.insert(tod(rng));
    int tol_min = tol_dist(rng);
    auto spec = compliance_spec({times.begin(), times.end()}, tol_min, 0.0);

    TimestampMs start = 19'000 * kDay;
    TimestampMs end = start + days * kDay;

    // Openings scattered around schedule points plus pure noise.
    std::vector<CanonicalObservation> obs;
    std::uniform_int_distribution<TimestampMs> jitter(-4 * 3'600'000LL,
                                                      4 * 3'600'000LL);
    std::uniform_int_distribution<TimestampMs> anywhere(1, days * kDay);
    std::uniform_int_distribution<int> count_dist(0, days * doses_per_day + 3);
    int n_openings = count_dist(rng);
    for (int i = 0; i < n_openings; ++i) {
      TimestampMs at = (i % 3 == 2)
                           ? start + anywhere(rng)
                           : start + anywhere(rng) / kDay * kDay +
                                 *times.begin() * 60'000LL + jitter(rng);
      obs.push_back(opening(at, std::to_string(iter) + ":" + std::to_string(i)));
    }

    auto [report, alert] = eval_drug_compliance(obs, spec, start, end);

    // Oracle inputs derived independently.
    std::vector<TimestampMs> schedule;
    for (std::int64_t day = start / kDay; day <= end / kDay; ++day)
      for (int m : times) {
        TimestampMs at = day * kDay + m * 60'000LL;
        if (at > start && at <= end) schedule.push_back(at);
      }
    std::sort(schedule.begin(), schedule.end());
    std::vector<std::pair<TimestampMs, std::string>> openings;
    for (const auto &o : obs)
      openings.emplace_back(o.effective_time, o.provenance.hex());
    auto expected = oracle_match(schedule, openings, tol_min * 60'000LL);

    REQUIRE(report.doses.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CAPTURE(iter);
      CAPTURE(i);
      CHECK(report.doses[i].taken == expected[i]);
    }
  }
}

TEST_CASE("adverse condition evaluation") {
  auto spec = adverse_spec(50, 120);
  auto hr = [&](double bpm, const std::string &salt = "") {
    return make_obs("heart-rate", ScalarValue{bpm, "/min"}, 1'000'000 * kDay,
                    salt);
  };

  SUBCASE("in-range readings stay quiet") {
    CHECK_FALSE(eval_adverse_condition(
                    {hr(62, "a"), hr(58, "b"), hr(53, "c")}, spec)
                    .has_value());
  }

  SUBCASE("upper bound violation names the bound") {
    auto alert = eval_adverse_condition({hr(150)}, spec);
    REQUIRE(alert.has_value());
    CHECK(alert->severity == Severity::Alert);
    CHECK(alert->message.find("exceeds upper bound") != std::string::npos);
    CHECK(alert->message.find("120") != std::string::npos);
  }

  SUBCASE("lower bound violation") {
    auto alert = eval_adverse_condition({hr(38)}, spec);
    REQUIRE(alert.has_value());
    CHECK(alert->message.find("below lower bound") != std::string::npos);
  }

  SUBCASE("irregular pulse event") {
    auto irr = make_obs("pulse_irregular",
                        EventStateValue{"pulse_irregular", true},
                        1'000'000 * kDay);
    auto alert = eval_adverse_condition({irr}, spec);
    REQUIRE(alert.has_value());
    CHECK(alert->message.find("irregular pulse") != std::string::npos);

    auto off = adverse_spec(50, 120, false);
    CHECK_FALSE(eval_adverse_condition({irr}, off).has_value());

    auto cleared = make_obs("pulse_irregular",
                            EventStateValue{"pulse_irregular", false},
                            1'000'000 * kDay, "x");
    CHECK_FALSE(eval_adverse_condition({cleared}, spec).has_value());
  }

  SUBCASE("guideline limits escalate severity") {
    auto with_guideline = spec;
    templates::GuidelineParam g;
    g.target_code = "oxygen-saturation";
    g.lower_limit = 90;
    g.unit = "%";
    g.action = templates::GuidelineAction::Emergency;
    with_guideline.guidelines.push_back(g);

    auto spo2 = make_obs("oxygen-saturation", ScalarValue{84, "%"},
                         1'000'000 * kDay);
    auto alert = eval_adverse_condition({hr(150), spo2}, with_guideline);
    REQUIRE(alert.has_value());
    CHECK(alert->severity == Severity::Emergency);
    CHECK(alert->triggering.size() == 2);
  }

  SUBCASE("emitted_at is the latest triggering time") {
    auto early = make_obs("heart-rate", ScalarValue{150, "/min"}, 5 * kDay);
    auto late = make_obs("heart-rate", ScalarValue{30, "/min"}, 9 * kDay);
    auto alert = eval_adverse_condition({late, early}, spec);
    REQUIRE(alert.has_value());
    CHECK(alert->emitted_at == 9 * kDay);
  }
}

TEST_CASE("adverse condition monotonicity") {
  auto spec = adverse_spec(50, 120);
  std::mt19937_64 rng(0xacdc);
  std::uniform_real_distribution<double> bpm(30, 160);
  std::uniform_int_distribution<int> len(0, 12);

  for (int iter = 0; iter < 300; ++iter) {
    std::vector<CanonicalObservation> window;
    int n = len(rng);
    for (int i = 0; i < n; ++i)
      window.push_back(make_obs("heart-rate", ScalarValue{bpm(rng), "/min"},
                                1'000 * kDay + i,
                                std::to_string(iter) + ":" + std::to_string(i)));
    bool alerted = eval_adverse_condition(window, spec).has_value();
    // One more out-of-range reading can only add evidence.
    window.push_back(make_obs("heart-rate", ScalarValue{200, "/min"},
                              1'000 * kDay + 99, std::to_string(iter)));
    auto after = eval_adverse_condition(window, spec);
    REQUIRE(after.has_value());
    if (alerted) CHECK(after->triggering.size() >= 2);
  }
}

TEST_CASE("emergency evaluation") {
  ContractSpec spec;
  spec.kind = ContractKind::EmergencyAlert;
  spec.patient_key = kPatient;
  spec.emergency.contacts = {"oncall@clinic.example", "family@example"};

  auto fall = make_obs("fall-detected", EventStateValue{"fall-detected", true},
                       2'000'000 * kDay);

  SUBCASE("one active fall, one event") {
    auto events = eval_emergency({fall}, spec);
    REQUIRE(events.size() == 1);
    CHECK(events[0].severity == Severity::Emergency);
    CHECK(events[0].contacts == spec.emergency.contacts);
    CHECK(events[0].triggering ==
          std::vector<cas::ContentAddress>{fall.provenance});
    CHECK(events[0].emitted_at == fall.effective_time);
  }

  SUBCASE("replayed observation dedups by provenance") {
    auto events = eval_emergency({fall, fall}, spec);
    CHECK(events.size() == 1);
  }

  SUBCASE("cleared fall state is quiet") {
    auto cleared = make_obs("fall-detected",
                            EventStateValue{"fall-detected", false},
                            2'000'000 * kDay, "c");
    CHECK(eval_emergency({cleared}, spec).empty());
  }

  SUBCASE("distinct falls produce distinct events") {
    auto second = make_obs("fall-detected",
                           EventStateValue{"fall-detected", true},
                           2'000'000 * kDay + 3'600'000, "later");
    auto events = eval_emergency({second, fall}, spec);
    REQUIRE(events.size() == 2);
    CHECK(events[0].emitted_at < events[1].emitted_at); // canonical order
    CHECK(events[0].dedup_key() != events[1].dedup_key());
  }
}

TEST_CASE("summarization") {
  ContractSpec spec;
  spec.kind = ContractKind::Summarization;
  spec.patient_key = kPatient;
  spec.summarization.codes = {"blood-pressure.systolic",
                              "blood-pressure.diastolic"};

  TimestampMs start = 20'000 * kDay;
  TimestampMs end = start + 7 * kDay;

  auto bp = [&](double sys, double dia, TimestampMs at) {
    VectorValue v;
    v.elements = {{"systolic", sys, "mm[Hg]"},
                  {"diastolic", dia, "mm[Hg]"},
                  {"mean", (sys + 2 * dia) / 3, "mm[Hg]"}};
    return make_obs("blood-pressure", v, at);
  };

  SUBCASE("vector series mirror the scripted points") {
    std::vector<CanonicalObservation> obs;
    std::vector<double> sys = {102, 110, 98, 120, 105, 115, 108};
    std::vector<double> dia = {51, 70, 64, 80, 66, 77, 72};
    for (std::size_t i = 0; i < sys.size(); ++i)
      obs.push_back(bp(sys[i], dia[i], start + (i + 1) * kDay));

    auto report = summarize(obs, spec, start, end);
    REQUIRE(report.series.size() == 2);
    REQUIRE(report.series[0].points.size() == 7);
    for (std::size_t i = 0; i < sys.size(); ++i) {
      CHECK(report.series[0].points[i].value == sys[i]);
      CHECK(report.series[1].points[i].value == dia[i]);
    }
    const auto &st = report.statistics.at("blood-pressure.systolic");
    CHECK(st.count == 7);
    CHECK(st.min == 98);
    CHECK(st.max == 120);
    CHECK(st.latest == 108);
  }

  SUBCASE("single observation collapses the statistics") {
    auto report = summarize({bp(120, 80, start + kDay)}, spec, start, end);
    const auto &st = report.statistics.at("blood-pressure.systolic");
    CHECK(st.count == 1);
    CHECK(st.min == 120);
    CHECK(st.max == 120);
    CHECK(st.mean == 120);
    CHECK(st.latest == 120);
  }

  SUBCASE("empty window keeps empty series") {
    auto report = summarize({}, spec, start, end);
    REQUIRE(report.series.size() == 2);
    CHECK(report.series[0].points.empty());
    CHECK(report.statistics.at("blood-pressure.systolic").count == 0);
    auto j = report.to_json();
    CHECK(j["statistics"]["blood-pressure.systolic"]["count"] == 0);
    CHECK_FALSE(j["statistics"]["blood-pressure.systolic"].contains("mean"));
  }

  SUBCASE("observations outside the window are ignored") {
    auto report =
        summarize({bp(120, 80, start), bp(130, 85, end + 1)}, spec, start, end);
    CHECK(report.series[0].points.empty()); // start exclusive, end inclusive
  }

  SUBCASE("compliance chart series") {
    auto cspec = compliance_spec({480, 1200});
    std::vector<CanonicalObservation> obs;
    // Miss day 2 evening, day 5 both.
    int n = 0;
    for (int day = 0; day < 7; ++day)
      for (int minutes : {480, 1200}) {
        if (day == 2 && minutes == 1200) continue;
        if (day == 5) continue;
        obs.push_back(
            opening(start + day * kDay + minutes * 60'000LL,
                    std::to_string(n++)));
      }
    auto [creport, alert] = eval_drug_compliance(obs, cspec, start, end);
    CHECK(creport.taken == 11);
    CHECK(creport.scheduled == 14);

    auto report = summarize({}, spec, start, end, &creport);
    REQUIRE(report.compliance.has_value());
    CHECK(report.compliance->taken == 11);
    CHECK(report.compliance->ratio == 11.0 / 14.0);

    double taken_sum = 0, missed_sum = 0;
    for (const auto &s : report.series) {
      if (s.code == "doses-taken") {
        CHECK(s.points.size() == 7);
        for (const auto &p : s.points) taken_sum += p.value;
      }
      if (s.code == "doses-missed")
        for (const auto &p : s.points) missed_sum += p.value;
    }
    CHECK(taken_sum == 11);
    CHECK(missed_sum == 3);
  }

  SUBCASE("statistics audit") {
    std::mt19937_64 rng(0x57a7);
    std::uniform_real_distribution<double> val(40, 200);
    std::uniform_int_distribution<int> len(0, 40);
    ContractSpec sspec;
    sspec.kind = ContractKind::Summarization;
    sspec.patient_key = kPatient;
    sspec.summarization.codes = {"heart-rate"};
    for (int iter = 0; iter < 200; ++iter) {
      std::vector<CanonicalObservation> obs;
      int n = len(rng);
      for (int i = 0; i < n; ++i)
        obs.push_back(make_obs(
            "heart-rate", ScalarValue{val(rng), "/min"},
            start + 1 + (static_cast<TimestampMs>(rng() % (7 * kDay))),
            std::to_string(iter) + ":" + std::to_string(i)));
      auto report = summarize(obs, sspec, start, end);
      const auto &series = report.series[0];
      const auto &st = report.statistics.at("heart-rate");
      REQUIRE(st.count == series.points.size());
      if (series.points.empty()) continue;
      double mn = series.points[0].value, mx = series.points[0].value, sum = 0;
      for (std::size_t i = 0; i < series.points.size(); ++i) {
        if (i) CHECK(series.points[i - 1].time <= series.points[i].time);
        mn = std::min(mn, series.points[i].value);
        mx = std::max(mx, series.points[i].value);
        sum += series.points[i].value;
      }
      CHECK(st.min == mn);
      CHECK(st.max == mx);
      CHECK(st.mean == sum / static_cast<double>(series.points.size()));
      CHECK(st.latest == series.points.back().value);
    }
  }
}

TEST_CASE("evaluations are deterministic") {
  auto spec = adverse_spec();
  std::vector<CanonicalObservation> obs = {
      make_obs("heart-rate", ScalarValue{150, "/min"}, 123 * kDay, "a"),
      make_obs("heart-rate", ScalarValue{45, "/min"}, 124 * kDay, "b"),
  };
  auto a = eval_adverse_condition(obs, spec);
  auto b = eval_adverse_condition(obs, spec);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(canonical_dump(a->to_json()) == canonical_dump(b->to_json()));

  // Alert round-trips through its JSON form.
  auto back = alert_event_from_json(a->to_json());
  CHECK(canonical_dump(back.to_json()) == canonical_dump(a->to_json()));
}
