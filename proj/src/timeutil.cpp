#include "weakties/timeutil.hpp"

#include "weakties/errors.hpp"

#include <cstdio>

namespace weakties::time {

namespace {

bool parse_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        char c = s[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

} // namespace

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int yr = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = yr + (m <= 2);
}

unsigned last_day_of_month(int y, unsigned m) {
    static const unsigned days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2) {
        const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        return leap ? 29 : 28;
    }
    return days[m - 1];
}

bool try_parse_rfc3339_utc(std::string_view s, std::int64_t& out) {
    if (s.size() != 20) return false;
    if (s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' || s[16] != ':' || s[19] != 'Z')
        return false;
    int y, mo, d, h, mi, sec;
    if (!parse_fixed_uint(s, 0, 4, y) || !parse_fixed_uint(s, 5, 2, mo) ||
        !parse_fixed_uint(s, 8, 2, d) || !parse_fixed_uint(s, 11, 2, h) ||
        !parse_fixed_uint(s, 14, 2, mi) || !parse_fixed_uint(s, 17, 2, sec))
        return false;
    if (mo < 1 || mo > 12) return false;
    if (d < 1 || d > static_cast<int>(last_day_of_month(y, static_cast<unsigned>(mo)))) return false;
    if (h > 23 || mi > 59 || sec > 59) return false;
    out = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
          h * 3600 + mi * 60 + sec;
    return true;
}

std::int64_t parse_rfc3339_utc(std::string_view s) {
    std::int64_t t;
    if (!try_parse_rfc3339_utc(s, t))
        throw DataError("invalid RFC 3339 UTC timestamp: '" + std::string(s) + "'");
    return t;
}

std::string format_rfc3339_utc(std::int64_t t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

std::int64_t minus_months(std::int64_t t, int months) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    std::int64_t total = static_cast<std::int64_t>(y) * 12 + (static_cast<int>(m) - 1) - months;
    std::int64_t ny = total / 12;
    std::int64_t nm = total % 12;
    if (nm < 0) {
        nm += 12;
        ny -= 1;
    }
    const int year = static_cast<int>(ny);
    const unsigned month = static_cast<unsigned>(nm) + 1;
    const unsigned day = std::min(d, last_day_of_month(year, month));
    return days_from_civil(year, month, day) * 86400 + rem;
}

int year_of(std::int64_t t) {
    std::int64_t days = t / 86400;
    if (t % 86400 < 0) days -= 1;
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    return y;
}

} // namespace weakties::time
