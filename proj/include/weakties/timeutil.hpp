#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace weakties::time {

// Timestamps are seconds since the Unix epoch, always UTC.

// Strict RFC 3339 UTC form "YYYY-MM-DDTHH:MM:SSZ". Returns false on any
// deviation (wrong length, out-of-range fields, non-Z offset).
bool try_parse_rfc3339_utc(std::string_view s, std::int64_t& out);

// Throwing variant; DataError on malformed input.
std::int64_t parse_rfc3339_utc(std::string_view s);

std::string format_rfc3339_utc(std::int64_t t);

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d);
void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d);
unsigned last_day_of_month(int y, unsigned m);

// Calendar-month shift, day-of-month clamped (Mar 31 minus 1 month is
// Feb 28/29), time of day preserved.
std::int64_t minus_months(std::int64_t t, int months);

int year_of(std::int64_t t);

} // namespace weakties::time
