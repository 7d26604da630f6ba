#pragma once

#include <compare>
#include <cstdio>
#include <string>

#include "portopt/common.hpp"

namespace portopt {

/// Calendar date. Only what the pipeline needs: ISO-8601 parsing/formatting,
/// ordering, month bucketing and weekday arithmetic for business days.
struct Date {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31

  auto operator<=>(const Date&) const = default;

  /// Months since year 0; bucket key for monthly aggregation.
  int month_index() const { return year * 12 + (month - 1); }

  /// Days since 1970-01-01 (proleptic Gregorian).
  long serial() const {
    long y = year;
    const int m = month;
    y -= m <= 2 ? 1 : 0;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + day - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
  }

  static Date from_serial(long z) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2 ? 1 : 0)), static_cast<int>(m),
                static_cast<int>(d)};
  }

  /// 0 = Monday ... 6 = Sunday.
  int weekday() const {
    const long s = serial();
    return static_cast<int>(((s % 7) + 10) % 7);
  }

  bool is_business_day() const { return weekday() < 5; }

  Date next_business_day() const {
    long s = serial() + 1;
    while (Date::from_serial(s).weekday() >= 5) ++s;
    return from_serial(s);
  }

  std::string iso() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
  }

  /// "YYYY-MM" label used for monthly panels.
  std::string month_label() const {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    return buf;
  }

  static Date parse(const std::string& s) {
    int y = 0, m = 0, d = 0;
    char dash1 = 0, dash2 = 0;
    if (std::sscanf(s.c_str(), "%d%c%d%c%d", &y, &dash1, &m, &dash2, &d) != 5 ||
        dash1 != '-' || dash2 != '-' || m < 1 || m > 12 || d < 1 || d > 31) {
      throw DataError("invalid ISO-8601 date: '" + s + "'");
    }
    return Date{y, m, d};
  }
};

}  // namespace portopt
