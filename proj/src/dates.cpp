#include "netpulse/dates.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace netpulse {

// civil calendar <-> day count, Hinnant's algorithm (exact for all i64 days)
std::int64_t days_from_civil(const CivilDate& d) {
    std::int64_t y = d.year;
    y -= d.month <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (d.month + (d.month > 2 ? -3 : 9)) + 2) / 5 + d.day - 1;
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
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

int weekday_from_days(std::int64_t days) {
    // 1970-01-01 is a Thursday (= 3 under Monday = 0)
    std::int64_t w = (days + 3) % 7;
    if (w < 0) w += 7;
    return static_cast<int>(w);
}

CivilDate parse_date(const std::string& text) {
    bool shaped = text.size() == 10 && text[4] == '-' && text[7] == '-';
    for (std::size_t i = 0; shaped && i < 10; ++i)
        if (i != 4 && i != 7 && !std::isdigit(static_cast<unsigned char>(text[i])))
            shaped = false;
    int y = 0, m = 0, d = 0;
    if (!shaped || std::sscanf(text.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3)
        throw std::invalid_argument("malformed date: '" + text + "' (want YYYY-MM-DD)");
    if (m < 1 || m > 12 || d < 1 || d > 31)
        throw std::invalid_argument("date out of range: '" + text + "'");
    CivilDate c{y, m, d};
    if (civil_from_days(days_from_civil(c)) != c)
        throw std::invalid_argument("invalid calendar day: '" + text + "'");
    return c;
}

std::string format_date(const CivilDate& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

int month_index(int year, int month) {
    return (year - 2006) * 12 + (month - 1);
}

CivilDate month_index_to_civil(int index) {
    int y = 2006, m = index;
    y += m / 12;
    m %= 12;
    if (m < 0) {
        m += 12;
        y -= 1;
    }
    return CivilDate{y, m + 1, 1};
}

int year_of_month_index(double t) {
    return static_cast<int>(std::floor(2006.0 + t / 12.0));
}

} // namespace netpulse
