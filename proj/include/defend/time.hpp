// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "defend/errors.hpp"

namespace defend {

namespace detail {

// Proleptic Gregorian day counting (Howard Hinnant's civil calendar algorithms).
constexpr int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

constexpr void civil_from_days(int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int yr = static_cast<int>(yoe) + static_cast<int>(era) * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = yr + (m <= 2);
}

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

inline int parse_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

}  // namespace detail

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  static bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

  static int days_in_month(int y, int m) {
    static constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m < 1 || m > 12) return 0;
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
  }

  bool valid() const {
    return year >= 1 && year <= 9999 && month >= 1 && month <= 12 && day >= 1 &&
           day <= days_in_month(year, month);
  }

  // "YYYY-MM-DD"
  static Date parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
      fail(Errc::invalid_date, "expected YYYY-MM-DD, got '" + std::string(text) + "'");
    auto ys = text.substr(0, 4), ms = text.substr(5, 2), ds = text.substr(8, 2);
    if (!detail::all_digits(ys) || !detail::all_digits(ms) || !detail::all_digits(ds))
      fail(Errc::invalid_date, "non-numeric date component in '" + std::string(text) + "'");
    Date d{detail::parse_int(ys), detail::parse_int(ms), detail::parse_int(ds)};
    if (!d.valid()) fail(Errc::invalid_date, "no such calendar day: '" + std::string(text) + "'");
    return d;
  }

  std::string to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
  }

  auto operator<=>(const Date&) const = default;
};

// Seconds since the Unix epoch, always UTC. Textual form "YYYY-MM-DDThh:mm:ssZ".
struct Timestamp {
  int64_t seconds = 0;

  static Timestamp from_date(const Date& d, int hour = 0, int minute = 0, int second = 0) {
    int64_t days = detail::days_from_civil(d.year, static_cast<unsigned>(d.month),
                                           static_cast<unsigned>(d.day));
    return Timestamp{days * 86400 + hour * 3600 + minute * 60 + second};
  }

  static Timestamp parse(std::string_view text) {
    if (text.size() != 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':' ||
        text[19] != 'Z')
      fail(Errc::invalid_date, "expected YYYY-MM-DDThh:mm:ssZ, got '" + std::string(text) + "'");
    Date d = Date::parse(text.substr(0, 10));
    auto hs = text.substr(11, 2), ms = text.substr(14, 2), ss = text.substr(17, 2);
    if (!detail::all_digits(hs) || !detail::all_digits(ms) || !detail::all_digits(ss))
      fail(Errc::invalid_date, "non-numeric time component in '" + std::string(text) + "'");
    int hour = detail::parse_int(hs), minute = detail::parse_int(ms), second = detail::parse_int(ss);
    if (hour > 23 || minute > 59 || second > 59)
      fail(Errc::invalid_date, "time of day out of range in '" + std::string(text) + "'");
    return from_date(d, hour, minute, second);
  }

  std::string to_string() const {
    int64_t days = seconds / 86400;
    int64_t rem = seconds % 86400;
    if (rem < 0) {
      rem += 86400;
      days -= 1;
    }
    int y;
    unsigned m, d;
    detail::civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
  }

  Timestamp operator+(int64_t secs) const { return Timestamp{seconds + secs}; }
  auto operator<=>(const Timestamp&) const = default;
};

}  // namespace defend
