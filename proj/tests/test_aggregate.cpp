#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "netpulse/aggregate.hpp"
#include "netpulse/csv.hpp"
#include "netpulse/dates.hpp"
#include "netpulse/rng.hpp"

using namespace netpulse;

namespace {

UrbanBoundary square(int id, const std::string& country, double lon0, double lat0,
                     double side = 1.0, int offset_min = 0) {
    UrbanBoundary b;
    b.city_id = id;
    b.country = country;
    b.utc_offset_minutes = offset_min;
    b.population_2000 = 100000.0;
    b.population_2010 = 200000.0;
    b.rings = {{{lon0, lat0},
                {lon0 + side, lat0},
                {lon0 + side, lat0 + side},
                {lon0, lat0 + side},
                {lon0, lat0}}};
    return b;
}

LocatedRecord rec(int city, std::int64_t ts, std::uint32_t ip, bool on) {
    return LocatedRecord{city, ts, IpAddress{ip}, on ? ProbeStatus::online : ProbeStatus::offline};
}

std::int64_t utc(int y, int m, int d, int hh = 0, int mm = 0) {
    return days_from_civil({y, m, d}) * 86400 + hh * 3600 + mm * 60;
}

} // namespace

TEST_CASE("point_in_polygon: square containment with edges inside") {
    const auto b = square(1, "AA", 0.0, 0.0);
    CHECK(point_in_polygon(0.5, 0.5, b));     // centroid
    CHECK(point_in_polygon(0.0, 0.5, b));     // edge
    CHECK(point_in_polygon(1.0, 0.5, b));     // opposite edge
    CHECK(point_in_polygon(0.0, 0.0, b));     // vertex
    CHECK(point_in_polygon(1.0, 1.0, b));     // vertex
    CHECK(!point_in_polygon(1.5, 0.5, b));
    CHECK(!point_in_polygon(-0.001, 0.5, b));
    CHECK(!point_in_polygon(0.5, 1.0001, b));
}

TEST_CASE("point_in_polygon: even-odd rule excludes holes") {
    UrbanBoundary b = square(2, "AA", 0.0, 0.0, 4.0);
    b.rings.push_back({{1.0, 1.0}, {3.0, 1.0}, {3.0, 3.0}, {1.0, 3.0}, {1.0, 1.0}});
    CHECK(point_in_polygon(0.5, 0.5, b));   // between outer ring and hole
    CHECK(!point_in_polygon(2.0, 2.0, b));  // inside the hole
    CHECK(point_in_polygon(2.0, 1.0, b));   // on the hole's edge counts inside
    CHECK(point_in_polygon(3.5, 2.0, b));
}

TEST_CASE("point_in_city prefers the lowest city_id on overlap") {
    const std::vector<UrbanBoundary> bs = {square(7, "AA", 0.0, 0.0, 2.0),
                                           square(3, "BB", 1.0, 1.0, 2.0)};
    CHECK(point_in_city(1.5, 1.5, bs) == 3); // inside both squares
    CHECK(point_in_city(0.5, 0.5, bs) == 7);
    CHECK(point_in_city(2.5, 2.5, bs) == 3);
    CHECK(!point_in_city(10.0, 10.0, bs).has_value());
}

TEST_CASE("boundary JSON round trips") {
    std::vector<UrbanBoundary> bs = {square(1, "AA", -10.0, 5.0, 1.0, -180),
                                     square(2, "BB", 30.0, -40.0, 2.0, 330)};
    const std::string path = "agg_test_boundaries.tmp.json";
    write_file(path, write_boundaries(bs));
    const auto back = read_boundaries(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].city_id == 1);
    CHECK(back[0].country == "AA");
    CHECK(back[0].utc_offset_minutes == -180);
    CHECK(back[0].population_2010 == 200000.0);
    CHECK(back[0].rings == bs[0].rings);
    CHECK(back[1].rings == bs[1].rings);
    std::remove(path.c_str());
}

TEST_CASE("read_boundaries validates rings and offsets") {
    const std::string path = "agg_test_badboundary.tmp.json";
    write_file(path, R"({"type":"FeatureCollection","features":[{"type":"Feature",
      "properties":{"city_id":1,"country":"AA","utc_offset_minutes":0,"pop2000":1,"pop2010":1},
      "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1]]]}}]})");
    CHECK_THROWS(read_boundaries(path)); // unclosed ring
    write_file(path, R"({"type":"FeatureCollection","features":[{"type":"Feature",
      "properties":{"city_id":1,"country":"AA","utc_offset_minutes":9999,"pop2000":1,"pop2010":1},
      "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}]})");
    CHECK_THROWS(read_boundaries(path)); // offset out of range
    std::remove(path.c_str());
}

TEST_CASE("boundary_latitude averages the outer ring vertices") {
    const auto b = square(1, "AA", 10.0, 40.0); // vertices at lat 40,40,41,41
    CHECK(boundary_latitude(b) == doctest::Approx(40.5));
    UrbanBoundary empty;
    CHECK_THROWS(boundary_latitude(empty));
}

TEST_CASE("assign_records splits located, unlocated and unassigned") {
    const std::vector<UrbanBoundary> bs = {square(1, "AA", 0.0, 0.0)};
    const std::int64_t rev = utc(2005, 12, 1);
    const GeoIndex geo = GeoIndex::build({
        GeoRangeRecord{{100}, {199}, 0.5, 0.5, rev},  // inside city 1
        GeoRangeRecord{{200}, {299}, 50.0, 50.0, rev}, // outside every boundary
    });
    std::vector<ScanRecord> scans = {
        {utc(2006, 1, 1), {150}, ProbeStatus::online},
        {utc(2006, 1, 1), {250}, ProbeStatus::online},  // located, unassigned
        {utc(2006, 1, 1), {999}, ProbeStatus::offline}, // no range
        {utc(2005, 11, 1), {150}, ProbeStatus::online}, // before first revision
    };
    AssignStats stats;
    const auto located = assign_records(scans, geo, bs, 2, &stats);
    REQUIRE(located.size() == 1);
    CHECK(located[0].city_id == 1);
    CHECK(located[0].ip.value == 150u);
    CHECK(stats.assigned == 1);
    CHECK(stats.unassigned == 1);
    CHECK(stats.unlocated == 2);
}

TEST_CASE("bin_activity maps local minutes to quarter-hour segments") {
    // UTC-3 city: 2006-01-01 00:07 UTC is 2005-12-31 21:07 local
    const std::vector<UrbanBoundary> bs = {square(1, "AA", 0.0, 0.0, 1.0, -180)};
    const auto bins = bin_activity(
        {
            rec(1, utc(2006, 1, 1, 0, 7), 10, true),
            rec(1, utc(2006, 1, 1, 0, 7), 11, false),
            rec(1, utc(2006, 1, 1, 2, 59), 10, true), // 23:59 local -> segment 95
            rec(1, utc(2006, 1, 1, 3, 1), 10, true),  // 00:01 next local date -> segment 0
        },
        bs, 1);
    REQUIRE(bins.size() == 3);
    CHECK(bins[0].local_date == days_from_civil({2005, 12, 31}));
    CHECK(bins[0].segment == 21 * 4);
    CHECK(bins[0].n_on == 1);
    CHECK(bins[0].n_off == 1);
    CHECK(bins[1].segment == 95);
    CHECK(bins[1].local_date == days_from_civil({2005, 12, 31}));
    CHECK(bins[2].segment == 0);
    CHECK(bins[2].local_date == days_from_civil({2006, 1, 1}));
}

TEST_CASE("bin_activity is invariant to input order and worker count") {
    const std::vector<UrbanBoundary> bs = {square(1, "AA", 0.0, 0.0),
                                           square(2, "BB", 5.0, 5.0, 1.0, 540)};
    Rng rng(55);
    std::vector<LocatedRecord> records;
    for (int i = 0; i < 10000; ++i) {
        const int city = 1 + static_cast<int>(rng.uniform_int(2));
        const std::int64_t ts = utc(2006, 1, 1) + static_cast<std::int64_t>(
                                                      rng.uniform_int(86400LL * 40));
        records.push_back(rec(city, ts, static_cast<std::uint32_t>(rng.uniform_int(500)),
                              rng.uniform() < 0.4));
    }
    auto sorted = records;
    std::sort(sorted.begin(), sorted.end(), [](const LocatedRecord& a, const LocatedRecord& b) {
        return std::tie(a.city_id, a.timestamp, a.ip.value) <
               std::tie(b.city_id, b.timestamp, b.ip.value);
    });
    const auto base = bin_activity(sorted, bs, 1);
    CHECK(bin_activity(records, bs, 1) == base);
    CHECK(bin_activity(records, bs, 3) == base);
    CHECK(bin_activity(records, bs, 8) == base);
}

TEST_CASE("fraction_online") {
    CHECK(fraction_online({1, 0, 0, 75, 25}) == doctest::Approx(0.75));
    CHECK(fraction_online({1, 0, 0, 0, 50}) == 0.0);
    CHECK_THROWS(fraction_online({1, 0, 0, 0, 0}));
}

TEST_CASE("monthly_unique_ips counts distinct probed addresses per local month") {
    const std::vector<UrbanBoundary> bs = {square(1, "AA", 0.0, 0.0)};
    std::vector<LocatedRecord> records;
    // ip 10 probed on 25 distinct days (coverage), both statuses; ip 11 offline-only
    for (int d = 1; d <= 25; ++d) {
        records.push_back(rec(1, utc(2006, 3, d, 12, 0), 10, d % 2 == 0));
        records.push_back(rec(1, utc(2006, 3, d, 12, 5), 11, false));
    }
    const auto counts = monthly_unique_ips(records, bs, 20);
    REQUIRE(counts.size() == 1);
    CHECK(counts[0].city_id == 1);
    CHECK(counts[0].year == 2006);
    CHECK(counts[0].month == 3);
    CHECK(counts[0].unique_ips == 2); // offline-only probes still mark presence

    // a month with too few covered days is dropped entirely
    records.push_back(rec(1, utc(2006, 4, 2, 12, 0), 10, true));
    const auto counts2 = monthly_unique_ips(records, bs, 20);
    CHECK(counts2.size() == 1);
    const auto counts3 = monthly_unique_ips(records, bs, 1);
    CHECK(counts3.size() == 2);
}

TEST_CASE("interpolate_population is affine with exact anchors") {
    const auto b = square(1, "AA", 0.0, 0.0); // 100k in 2000, 200k in 2010
    CHECK(interpolate_population(b, 2000) == doctest::Approx(100000.0));
    CHECK(interpolate_population(b, 2010) == doctest::Approx(200000.0));
    CHECK(interpolate_population(b, 2005) == doctest::Approx(150000.0));
    CHECK(interpolate_population(b, 2012) == doctest::Approx(220000.0)); // extrapolation
    UrbanBoundary missing = b;
    missing.population_2000 = 0.0;
    CHECK_THROWS(interpolate_population(missing, 2006));
}

TEST_CASE("missoni_correct: OLS trend, scaling factors, diagnostics") {
    // two cities summing to monthly totals {1000, 800, 1200}
    std::vector<MonthlyCityCount> counts = {
        {1, 2006, 1, 600, 0.0}, {2, 2006, 1, 400, 0.0},
        {1, 2006, 2, 500, 0.0}, {2, 2006, 2, 300, 0.0},
        {1, 2006, 3, 700, 0.0}, {2, 2006, 3, 500, 0.0},
    };
    const auto res = missoni_correct(counts, 100);
    CHECK(res.dropped_cities.empty());
    // closed-form OLS through (0,1000), (1,800), (2,1200)
    CHECK(res.trend_intercept == doctest::Approx(900.0).epsilon(1e-12));
    CHECK(res.trend_slope == doctest::Approx(100.0).epsilon(1e-12));
    REQUIRE(res.residuals.size() == 3);
    CHECK(res.residuals[0] == doctest::Approx(100.0));
    CHECK(res.residuals[1] == doctest::Approx(-200.0));
    CHECK(res.residuals[2] == doctest::Approx(100.0));
    // scaling factors trend/total = {0.9, 1.25, 11/12}; rows keep input order
    REQUIRE(res.corrected.size() == 6);
    CHECK(res.corrected[0].corrected == doctest::Approx(600 * 0.9));
    CHECK(res.corrected[1].corrected == doctest::Approx(400 * 0.9));
    CHECK(res.corrected[2].corrected == doctest::Approx(500 * 1.25));
    CHECK(res.corrected[3].corrected == doctest::Approx(300 * 1.25));
    CHECK(res.corrected[4].corrected == doctest::Approx(700 * 11.0 / 12.0));
    CHECK(res.corrected[5].corrected == doctest::Approx(500 * 11.0 / 12.0));
    // post-invariant: per-month corrected totals sit exactly on the trend
    for (std::size_t i = 0; i < res.months.size(); ++i) {
        double sum = 0.0;
        for (const auto& c : res.corrected)
            if (c.index() == res.months[i]) sum += c.corrected;
        CHECK(sum == doctest::Approx(900.0 + 100.0 * res.months[i]).epsilon(1e-12));
    }
}

TEST_CASE("missoni_correct: linear totals are a fixed point") {
    std::vector<MonthlyCityCount> counts;
    for (int m = 0; m < 6; ++m) counts.push_back({1, 2006, m + 1, 1000 + 50 * m, 0.0});
    const auto res = missoni_correct(counts, 10);
    for (std::size_t i = 0; i < res.corrected.size(); ++i)
        CHECK(res.corrected[i].corrected ==
              doctest::Approx(static_cast<double>(counts[i].unique_ips)).epsilon(1e-12));
}

TEST_CASE("missoni_correct: cutoff failures drop the whole city") {
    std::vector<MonthlyCityCount> counts = {
        {1, 2006, 1, 600, 0.0}, {2, 2006, 1, 400, 0.0},
        {1, 2006, 2, 650, 0.0}, {2, 2006, 2, 450, 0.0},
        {1, 2006, 3, 700, 0.0}, {2, 2006, 3, 120, 0.0}, // city 2 dips below 200
    };
    const auto res = missoni_correct(counts, 200);
    REQUIRE(res.dropped_cities == std::vector<int>{2});
    for (const auto& c : res.corrected) CHECK(c.city_id == 1);

    CHECK_THROWS(missoni_correct(counts, 5000));                 // everyone fails
    CHECK_THROWS(missoni_correct({{1, 2006, 1, 600, 0.0}}, 10)); // single month
}

TEST_CASE("country_ipc_series divides by interpolated population and averages cities") {
    std::vector<UrbanBoundary> bs = {square(1, "AA", 0.0, 0.0), square(2, "AA", 3.0, 0.0),
                                     square(3, "BB", 6.0, 0.0)};
    bs[1].population_2000 = bs[1].population_2010 = 50000.0;
    std::vector<MonthlyCityCount> corrected = {
        {1, 2006, 1, 0, 16000.0}, // pop 2006 = 160000 -> ipc 0.1
        {2, 2006, 1, 0, 10000.0}, // pop 50000 -> ipc 0.2
        {3, 2006, 1, 0, 8000.0},  // pop 160000 -> ipc 0.05
    };
    const auto series = country_ipc_series(corrected, bs);
    REQUIRE(series.size() == 2);
    CHECK(series[0].country == "AA");
    CHECK(series[0].n_cities == 2);
    REQUIRE(series[0].ipc.size() == 1);
    CHECK(series[0].month_indices[0] == 0);
    CHECK(series[0].ipc[0] == doctest::Approx(0.15)); // unweighted mean of 0.1 and 0.2
    CHECK(series[1].country == "BB");
    CHECK(series[1].ipc[0] == doctest::Approx(0.05));
}

TEST_CASE("bins CSV round trips with ISO dates") {
    std::vector<SegmentBin> bins = {
        {1, days_from_civil({2006, 1, 1}), 0, 5, 3},
        {1, days_from_civil({2006, 1, 1}), 95, 2, 6},
        {2, days_from_civil({2007, 6, 15}), 40, 0, 1},
    };
    const std::string path = "agg_test_bins.tmp.csv";
    write_file(path, write_bins_csv(bins));
    CHECK(read_bins_csv(path) == bins);

    write_file(path, "city_id,local_date,segment,n_on,n_off\n1,2006-01-01,96,1,1\n");
    CHECK_THROWS(read_bins_csv(path)); // segment out of range
    std::remove(path.c_str());
}

TEST_CASE("counts CSV round trips") {
    std::vector<MonthlyCityCount> counts = {{1, 2006, 1, 120, 130.5}, {2, 2012, 12, 7, 7.0}};
    const std::string path = "agg_test_counts.tmp.csv";
    write_file(path, write_counts_csv(counts));
    const auto back = read_counts_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].unique_ips == 120);
    CHECK(back[0].corrected == doctest::Approx(130.5));
    CHECK(back[1].year == 2012);

    write_file(path, "city_id,year,month,unique_ips,corrected\n1,2006,13,1,1\n");
    CHECK_THROWS(read_counts_csv(path)); // month out of range
    std::remove(path.c_str());
}
