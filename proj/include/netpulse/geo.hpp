#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netpulse/dates.hpp"

namespace netpulse {

// IPv4 address in canonical 32-bit form.
struct IpAddress {
    std::uint32_t value = 0;
    auto operator<=>(const IpAddress&) const = default;
};

IpAddress parse_ipv4(const std::string& text); // throws std::invalid_argument
std::string format_ipv4(IpAddress ip);

enum class ProbeStatus : std::uint8_t { offline = 0, online = 1 };

struct ScanRecord {
    std::int64_t timestamp; // UTC seconds
    IpAddress ip;
    ProbeStatus status;
};

struct GeoRangeRecord {
    IpAddress ip_lo, ip_hi;
    double lon = 0.0, lat = 0.0;
    std::int64_t revision_date = 0; // UTC day start, seconds

    bool valid() const {
        return ip_lo <= ip_hi && lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
    }
};

struct GeoLocation {
    double lon, lat;
    bool operator==(const GeoLocation&) const = default;
};

// Revision-dated interval index. Within a revision, overlaps are resolved at
// build time (last-loaded record wins on the overlapped sub-interval), so
// lookup is a pure binary search over disjoint intervals. A revision covers
// queries from its revision_date until the next revision_date.
class GeoIndex {
public:
    struct BuildStats {
        std::size_t accepted = 0;
        std::size_t rejected = 0;  // ip_lo > ip_hi or bad coordinates
        std::size_t conflicts = 0; // later records that clipped earlier ones
    };

    static GeoIndex build(const std::vector<GeoRangeRecord>& records, BuildStats* stats = nullptr);

    std::optional<GeoLocation> locate(IpAddress ip, std::int64_t t) const;

    // search-step counter for the logarithmic-cost property test
    std::optional<GeoLocation> locate_counted(IpAddress ip, std::int64_t t,
                                              std::size_t& steps) const;

    std::size_t revision_count() const { return revisions_.size(); }
    std::size_t interval_count() const;

private:
    struct Interval {
        std::uint32_t lo, hi; // inclusive
        GeoLocation loc;
    };
    struct Revision {
        std::int64_t date;
        std::vector<Interval> intervals; // sorted by lo, pairwise disjoint
    };
    std::vector<Revision> revisions_; // sorted by date
};

// Reference implementation: linear scan over (revision, record) pairs in load
// order, honoring last-wins overlap semantics. Used as the oracle in tests.
std::optional<GeoLocation> locate_bruteforce(const std::vector<GeoRangeRecord>& records,
                                             IpAddress ip, std::int64_t t);

// CSV ingestion: `timestamp_utc,ip,status` / `ip_lo,ip_hi,lon,lat,revision_date`
std::vector<ScanRecord> read_scan_csv(const std::string& path);
std::vector<GeoRangeRecord> read_geo_csv(const std::string& path);

} // namespace netpulse
