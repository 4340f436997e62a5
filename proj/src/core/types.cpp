#include "blockiot/core/types.hpp"

#include <cctype>
#include <stdexcept>

namespace blockiot {

namespace {

std::string normalize_name(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out;
  out.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c))
                           : static_cast<char>(c));
  }
  return out;
}

} // namespace

std::string_view kind_name(MeasurementKind k) {
  switch (k) {
    case MeasurementKind::Scalar: return "scalar";
    case MeasurementKind::Vector: return "vector";
    case MeasurementKind::Code: return "code";
    case MeasurementKind::EventState: return "event_state";
    case MeasurementKind::Waveform: return "waveform";
    case MeasurementKind::String: return "string";
  }
  return "scalar";
}

std::optional<MeasurementKind> kind_from_name(std::string_view s) {
  if (s == "scalar") return MeasurementKind::Scalar;
  if (s == "vector") return MeasurementKind::Vector;
  if (s == "code") return MeasurementKind::Code;
  if (s == "event_state") return MeasurementKind::EventState;
  if (s == "waveform") return MeasurementKind::Waveform;
  if (s == "string") return MeasurementKind::String;
  return std::nullopt;
}

MeasurementKind kind_of(const MeasurementValue &v) {
  return static_cast<MeasurementKind>(v.index());
}

std::string canonical_biometric_string(std::string_view first,
                                       std::string_view last,
                                       const CivilDate &dob) {
  return normalize_name(first) + "|" + normalize_name(last) + "|" +
         format_date(dob);
}

PatientKey patient_key(std::string_view first, std::string_view last,
                       const CivilDate &dob) {
  std::string f = normalize_name(first);
  std::string l = normalize_name(last);
  if (f.empty() || l.empty())
    throw std::invalid_argument("patient_key: empty name");
  if (!civil_date_valid(dob))
    throw std::invalid_argument("patient_key: invalid date");
  if (days_from_civil(dob) * 86400000LL > now_utc_ms())
    throw std::invalid_argument("patient_key: date of birth in the future");
  return sha256(f + "|" + l + "|" + format_date(dob));
}

PatientIdentity make_patient_identity(std::string first, std::string last,
                                      const CivilDate &dob) {
  PatientIdentity p;
  p.patient_key = patient_key(first, last, dob);
  p.first_name = std::move(first);
  p.last_name = std::move(last);
  p.date_of_birth = dob;
  return p;
}

} // namespace blockiot
