#include "blockiot/core/time.hpp"

#include <chrono>
#include <cstdio>

namespace blockiot {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(int y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30,
                                       31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return kDays[m - 1];
}

// Parses exactly n ASCII digits from s at pos; returns -1 on mismatch.
long parse_digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) return -1;
  long v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return -1;
    v = v * 10 + (c - '0');
  }
  return v;
}

} // namespace

bool civil_date_valid(const CivilDate &d) {
  if (d.month < 1 || d.month > 12) return false;
  if (d.day < 1 || d.day > days_in_month(d.year, d.month)) return false;
  return true;
}

std::int64_t days_from_civil(const CivilDate &d) {
  // Howard Hinnant's algorithm, proleptic Gregorian.
  std::int64_t y = d.year;
  unsigned m = d.month;
  unsigned day = d.day;
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned day = doy - (153 * mp + 2) / 5 + 1;
  const unsigned month = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (month <= 2)), month, day};
}

std::optional<CivilDate> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  long y = parse_digits(s, 0, 4);
  long m = parse_digits(s, 5, 2);
  long d = parse_digits(s, 8, 2);
  if (y < 0 || m < 0 || d < 0) return std::nullopt;
  CivilDate out{static_cast<int>(y), static_cast<unsigned>(m),
                static_cast<unsigned>(d)};
  if (!civil_date_valid(out)) return std::nullopt;
  return out;
}

std::string format_date(const CivilDate &d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", d.year, d.month, d.day);
  return buf;
}

std::optional<TimestampMs> parse_timestamp(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SS[.mmm]Z
  if (s.size() != 20 && s.size() != 24) return std::nullopt;
  if (s[10] != 'T' || s.back() != 'Z') return std::nullopt;
  auto date = parse_date(s.substr(0, 10));
  if (!date) return std::nullopt;
  if (s[13] != ':' || s[16] != ':') return std::nullopt;
  long hh = parse_digits(s, 11, 2);
  long mm = parse_digits(s, 14, 2);
  long ss = parse_digits(s, 17, 2);
  if (hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 59)
    return std::nullopt;
  long ms = 0;
  if (s.size() == 24) {
    if (s[19] != '.') return std::nullopt;
    ms = parse_digits(s, 20, 3);
    if (ms < 0) return std::nullopt;
  }
  std::int64_t days = days_from_civil(*date);
  return ((days * 24 + hh) * 60 + mm) * 60000 + ss * 1000 + ms;
}

std::string format_timestamp(TimestampMs t) {
  std::int64_t ms = t % 1000;
  std::int64_t sec = t / 1000;
  if (ms < 0) {
    ms += 1000;
    sec -= 1;
  }
  std::int64_t days = sec / 86400;
  std::int64_t sod = sec % 86400;
  if (sod < 0) {
    sod += 86400;
    days -= 1;
  }
  CivilDate d = civil_from_days(days);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                d.year, d.month, d.day, static_cast<int>(sod / 3600),
                static_cast<int>((sod / 60) % 60), static_cast<int>(sod % 60),
                static_cast<int>(ms));
  return buf;
}

TimestampMs now_utc_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

} // namespace blockiot
