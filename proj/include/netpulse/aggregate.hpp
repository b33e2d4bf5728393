#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netpulse/geo.hpp"

namespace netpulse {

struct UrbanBoundary {
    int city_id = 0;
    std::string country;
    int utc_offset_minutes = 0;          // fixed offset, no DST
    double population_2000 = 0.0, population_2010 = 0.0;
    // one or more closed rings (first vertex repeated last); even-odd rule
    std::vector<std::vector<std::pair<double, double>>> rings;
};

// JSON feature collection with properties
// city_id, country, utc_offset_minutes, pop2000, pop2010 and Polygon or
// MultiPolygon geometry in lon/lat.
std::vector<UrbanBoundary> read_boundaries(const std::string& path);
std::string write_boundaries(const std::vector<UrbanBoundary>& bs);

// representative latitude: vertex mean of the first ring
double boundary_latitude(const UrbanBoundary& b);

// Even-odd ray casting; points on an edge or vertex count as inside.
// Containment in several boundaries resolves to the lowest city_id.
bool point_in_polygon(double lon, double lat, const UrbanBoundary& b);
std::optional<int> point_in_city(double lon, double lat,
                                 const std::vector<UrbanBoundary>& boundaries);

struct SegmentBin {
    int city_id;
    std::int64_t local_date; // days since epoch, in city-local time
    int segment;             // 0..95, quarter hour of local day
    std::int64_t n_on, n_off;

    bool operator==(const SegmentBin&) const = default;
};

struct LocatedRecord {
    int city_id;
    std::int64_t timestamp; // UTC seconds
    IpAddress ip;
    ProbeStatus status;
};

// Assign located records to cities (unassigned records are dropped and counted).
struct AssignStats {
    std::size_t assigned = 0;
    std::size_t unlocated = 0;  // no geolocation at probe time
    std::size_t unassigned = 0; // located but outside every boundary
};
std::vector<LocatedRecord> assign_records(const std::vector<ScanRecord>& scans,
                                          const GeoIndex& geo,
                                          const std::vector<UrbanBoundary>& boundaries,
                                          int workers, AssignStats* stats = nullptr);

// 15-minute binning in city-local time. Output sorted by (city, date, segment),
// identical for any input order and any worker count.
std::vector<SegmentBin> bin_activity(const std::vector<LocatedRecord>& records,
                                     const std::vector<UrbanBoundary>& boundaries, int workers);

double fraction_online(const SegmentBin& bin); // throws on empty bin

struct MonthlyCityCount {
    int city_id;
    int year;
    int month; // 1..12
    std::int64_t unique_ips;
    double corrected; // 0 until missoni_correct runs

    int index() const { return month_index(year, month); }
};

// Distinct probed IPs per (city, local month). Months whose scan coverage
// spans fewer than min_days distinct local dates are dropped entirely.
std::vector<MonthlyCityCount> monthly_unique_ips(const std::vector<LocatedRecord>& records,
                                                 const std::vector<UrbanBoundary>& boundaries,
                                                 int min_days = 20);

double interpolate_population(const UrbanBoundary& b, int year);

// `city_id,local_date,segment,n_on,n_off` with ISO dates
std::string write_bins_csv(const std::vector<SegmentBin>& bins);
std::vector<SegmentBin> read_bins_csv(const std::string& path);

// `city_id,year,month,unique_ips,corrected`
std::string write_counts_csv(const std::vector<MonthlyCityCount>& counts);
std::vector<MonthlyCityCount> read_counts_csv(const std::string& path);

struct MissoniResult {
    std::vector<MonthlyCityCount> corrected; // only kept cities, corrected filled
    std::vector<int> dropped_cities;
    double trend_intercept = 0.0, trend_slope = 0.0; // over month index
    std::vector<double> residuals;                   // total_m - trend(m) per retained month
    std::vector<int> months;                         // retained month indices, sorted
};

// Cutoff filter, linear trend on monthly totals, per-month scaling factors.
// Post-invariant: sum of corrected counts per month equals the trend value.
MissoniResult missoni_correct(const std::vector<MonthlyCityCount>& counts,
                              std::int64_t cutoff = 500);

// Unweighted mean IP-per-capita over a country's retained cities, by month.
struct CountrySeries {
    std::string country;
    std::vector<int> month_indices;
    std::vector<double> ipc;
    int n_cities = 0;
};
std::vector<CountrySeries> country_ipc_series(const std::vector<MonthlyCityCount>& corrected,
                                              const std::vector<UrbanBoundary>& boundaries);

} // namespace netpulse
