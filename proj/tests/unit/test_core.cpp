#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "blockiot/core/json.hpp"
#include "blockiot/core/types.hpp"
#include "blockiot/core/units.hpp"
#include "blockiot/core/validate.hpp"

using namespace blockiot;

// sha256("ada|lovelace|1815-12-10"), frozen from an independent
// implementation of SHA-256 over the documented canonical string.
static const char *kAdaKeyHex =
    "cc069b9f896365adf8a4bfdb707ca8d36b3407900b623a4475a2eb37dc294db5";

TEST_CASE("patient_key digests the canonical biometric string") {
  CivilDate dob{1815, 12, 10};
  auto k = patient_key("Ada", "Lovelace", dob);
  CHECK(digest_hex(k) == kAdaKeyHex);

  // determinism
  CHECK(patient_key("Ada", "Lovelace", dob) == k);

  // trim + case-fold normalization reaches the same key
  CHECK(patient_key("ADA ", " lovelace", dob) == k);
  CHECK(canonical_biometric_string("ADA ", " lovelace", dob) ==
        "ada|lovelace|1815-12-10");
}

TEST_CASE("patient_key rejects bad input") {
  CHECK_THROWS(patient_key("", "Lovelace", CivilDate{1815, 12, 10}));
  CHECK_THROWS(patient_key("Ada", "  ", CivilDate{1815, 12, 10}));
  CHECK_THROWS(patient_key("Ada", "Lovelace", CivilDate{1815, 13, 10}));
  CHECK_THROWS(patient_key("Ada", "Lovelace", CivilDate{1900, 2, 29}));
  CHECK_THROWS(patient_key("Ada", "Lovelace", CivilDate{9999, 1, 1}));
}

TEST_CASE("patient_key distinct on distinct normalized triples") {
  std::mt19937 rng(7);
  std::set<std::tuple<std::string, std::string, int>> seen;
  std::set<std::string> keys;
  int produced = 0;
  while (produced < 10000) {
    std::string first = "f" + std::to_string(rng() % 100000);
    std::string last = "l" + std::to_string(rng() % 100000);
    int day = 1 + static_cast<int>(rng() % 28);
    if (!seen.insert({first, last, day}).second) continue;
    keys.insert(digest_hex(
        patient_key(first, last, CivilDate{1970, 6, static_cast<unsigned>(day)})));
    ++produced;
  }
  CHECK(keys.size() == 10000);
}

TEST_CASE("normalize_unit converts to the canonical unit") {
  auto lb = normalize_unit(150, "[lb_av]");
  REQUIRE(lb.has_value());
  CHECK(lb->unit == "kg");
  CHECK(lb->magnitude == doctest::Approx(150 * 0.45359237).epsilon(1e-12));

  auto cel = normalize_unit(37.5, "Cel");
  REQUIRE(cel.has_value());
  CHECK(cel->unit == "Cel");
  CHECK(cel->magnitude == 37.5);

  auto glucose = normalize_unit(96, "mg/dL");
  REQUIRE(glucose.has_value());
  CHECK(glucose->unit == "mg/dL");
  CHECK(glucose->magnitude == 96.0);

  CHECK_FALSE(normalize_unit(1, "furlong").has_value());
}

TEST_CASE("normalize_unit is idempotent over the whole table") {
  const char *codes[] = {"kg", "g",  "[lb_av]", "m",     "km",    "cm",
                         "[in_i]",   "Cel",     "[degF]", "K",    "mm[Hg]",
                         "kPa",      "Pa",      "mg/dL",  "g/L",  "/min",
                         "/s",       "/h",      "L",      "mL",   "s",
                         "min",      "ms",      "1",      "%",    "[iU]",
                         "{steps}",  "{beats}", "{doses}"};
  for (const char *c : codes) {
    auto once = normalize_unit(123.5, c);
    REQUIRE(once.has_value());
    auto twice = normalize_unit(once->magnitude, once->unit);
    REQUIRE(twice.has_value());
    CHECK(twice->magnitude == once->magnitude);
    CHECK(twice->unit == once->unit);
  }
}

TEST_CASE("temperature conversions are affine") {
  auto f = normalize_unit(98.6, "[degF]");
  REQUIRE(f.has_value());
  CHECK(f->unit == "Cel");
  CHECK(f->magnitude == doctest::Approx(37.0).epsilon(1e-9));
  auto k = normalize_unit(273.15, "K");
  REQUIRE(k.has_value());
  CHECK(k->magnitude == doctest::Approx(0.0).epsilon(1e-9));
}

static CanonicalObservation sample_scalar_obs() {
  CanonicalObservation o;
  o.subject = patient_key("Ada", "Lovelace", CivilDate{1815, 12, 10});
  o.device = DeviceIdentity{"P1", "GM3", 528392};
  o.effective_time = *parse_timestamp("2021-01-01T08:00:00.000Z");
  o.kind = MeasurementKind::Scalar;
  o.value = ScalarValue{96.0, "mg/dL"};
  o.code_binding = "blood-glucose";
  o.provenance = cas::ContentAddress::of(std::string_view("raw"));
  return o;
}

TEST_CASE("validate_observation") {
  auto ok = sample_scalar_obs();
  CHECK(validate_observation(ok).empty());

  auto mismatch = ok;
  mismatch.kind = MeasurementKind::Vector;
  auto v = validate_observation(mismatch);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0] == "kind/value mismatch");

  auto wf = ok;
  wf.kind = MeasurementKind::Waveform;
  wf.value = WaveformValue{0.0, {"I"}, {1.0, 2.0}};
  auto wv = validate_observation(wf);
  bool found = false;
  for (const auto &s : wv) found |= (s == "sample_rate_hz > 0");
  CHECK(found);
}

TEST_CASE("measurement values round-trip through the wire encoding") {
  std::vector<CanonicalObservation> cases;
  {
    auto o = sample_scalar_obs();
    cases.push_back(o);
    o.kind = MeasurementKind::Vector;
    o.value = VectorValue{{{"systolic", 102, "mm[Hg]"},
                           {"diastolic", 51, "mm[Hg]"},
                           {"mean", 76, "mm[Hg]"}}};
    cases.push_back(o);
    o.kind = MeasurementKind::Code;
    o.value = CodeValue{"FASTING"};
    cases.push_back(o);
    o.kind = MeasurementKind::EventState;
    o.value = EventStateValue{"battery_low", true};
    cases.push_back(o);
    o.kind = MeasurementKind::Waveform;
    o.value = WaveformValue{250.0, {"p", "q", "r", "s", "t"},
                            {0.125, -0.5, 1.75, -0.25, 0.375}};
    cases.push_back(o);
    o.kind = MeasurementKind::String;
    o.value = StringValue{"Hill Climb"};
    cases.push_back(o);
  }
  for (const auto &o : cases) {
    auto j = observation_to_json(o);
    auto text = canonical_dump(j);
    auto back = observation_from_json(Json::parse(text));
    CHECK(back == o);
    // canonical encoding is stable under re-encode
    CHECK(canonical_dump(observation_to_json(back)) == text);
  }
}

TEST_CASE("timestamps format with millisecond precision") {
  auto t = parse_timestamp("2021-01-05T13:45:12.345Z");
  REQUIRE(t.has_value());
  CHECK(format_timestamp(*t) == "2021-01-05T13:45:12.345Z");
  auto whole = parse_timestamp("2021-01-05T13:45:12Z");
  REQUIRE(whole.has_value());
  CHECK(format_timestamp(*whole) == "2021-01-05T13:45:12.000Z");
  CHECK_FALSE(parse_timestamp("2021-01-05 13:45:12Z").has_value());
  CHECK_FALSE(parse_timestamp("2021-13-05T13:45:12Z").has_value());
}
