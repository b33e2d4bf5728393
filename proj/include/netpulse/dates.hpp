#pragma once

#include <cstdint>
#include <string>

namespace netpulse {

struct CivilDate {
    int year;
    int month; // 1..12
    int day;   // 1..31
    bool operator==(const CivilDate&) const = default;
    bool operator<(const CivilDate& o) const {
        if (year != o.year) return year < o.year;
        if (month != o.month) return month < o.month;
        return day < o.day;
    }
};

// days since 1970-01-01 (negative before)
std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t days);

// Monday = 0 .. Sunday = 6
int weekday_from_days(std::int64_t days);

// "YYYY-MM-DD"; throws std::invalid_argument on malformed input
CivilDate parse_date(const std::string& text);
std::string format_date(const CivilDate& d);

// study month index: 0 = January 2006
int month_index(int year, int month);
CivilDate month_index_to_civil(int index);

// calendar year containing fractional month index t (t may be negative)
int year_of_month_index(double t);

} // namespace netpulse
