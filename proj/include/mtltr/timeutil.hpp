#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace mtltr {

// Timestamps are local campus time, stored as seconds since 1970-01-01 00:00:00
// with no timezone adjustment anywhere.
using Instant = std::int64_t;

constexpr std::int64_t kSecondsPerDay = 86400;

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

// Parses "YYYY-MM-DDTHH:MM:SS". Returns nullopt on any malformation.
std::optional<Instant> parse_instant(const std::string& s);
// Parses "YYYY-MM-DD" to midnight of that day.
std::optional<Instant> parse_date(const std::string& s);

std::string format_instant(Instant t);
std::string format_date(Instant t);

inline int second_of_day(Instant t) {
  std::int64_t s = t % kSecondsPerDay;
  if (s < 0) s += kSecondsPerDay;
  return static_cast<int>(s);
}

inline int hour_of_day(Instant t) { return second_of_day(t) / 3600; }

inline std::int64_t day_index(Instant t) {
  std::int64_t d = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --d;
  return d;
}

// 0 = Monday ... 6 = Sunday.
int weekday(Instant t);

inline bool is_weekend(Instant t) { return weekday(t) >= 5; }

// Sleep-pattern days are anchored at 04:00 so post-midnight events attach to
// the preceding day.
inline std::int64_t anchored_day_index(Instant t) {
  return day_index(t - 4 * 3600);
}

}  // namespace mtltr
