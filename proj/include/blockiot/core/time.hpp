#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace blockiot {

// Milliseconds since the Unix epoch, always UTC.
using TimestampMs = std::int64_t;

struct CivilDate {
  int year = 0;
  unsigned month = 1; // 1..12
  unsigned day = 1;   // 1..31

  bool operator==(const CivilDate &) const = default;
  auto operator<=>(const CivilDate &) const = default;
};

bool civil_date_valid(const CivilDate &d);

// Days since 1970-01-01 in the proleptic Gregorian calendar.
std::int64_t days_from_civil(const CivilDate &d);
CivilDate civil_from_days(std::int64_t days);

// "YYYY-MM-DD", strict.
std::optional<CivilDate> parse_date(std::string_view s);
std::string format_date(const CivilDate &d);

// "YYYY-MM-DDTHH:MM:SS.mmmZ". Parsing also accepts whole-second form
// ("...:SSZ"); formatting always emits milliseconds.
std::optional<TimestampMs> parse_timestamp(std::string_view s);
std::string format_timestamp(TimestampMs t);

TimestampMs now_utc_ms();

} // namespace blockiot
