#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "netpulse/chrono.hpp"
#include "netpulse/csv.hpp"
#include "netpulse/dates.hpp"
#include "netpulse/rng.hpp"
#include "netpulse/smoothing.hpp"

using namespace netpulse;

namespace {

constexpr std::int64_t kMonday = 13150; // 2006-01-02

std::vector<SegmentBin> day_bins(int city, std::int64_t date,
                                 const std::array<double, 96>& frac,
                                 std::int64_t total = 1000) {
    std::vector<SegmentBin> bins;
    for (int s = 0; s < 96; ++s) {
        const auto on = static_cast<std::int64_t>(std::lround(frac[static_cast<std::size_t>(s)] *
                                                              static_cast<double>(total)));
        bins.push_back(SegmentBin{city, date, s, on, total - on});
    }
    return bins;
}

std::array<double, 96> wave_pattern(double amp = 0.2, double base = 0.5) {
    std::array<double, 96> v{};
    for (int s = 0; s < 96; ++s) v[static_cast<std::size_t>(s)] = base + amp * std::sin(s * 0.13);
    return v;
}

DiurnalTrace trace_of(int city, std::int64_t date, const std::array<double, 96>& values) {
    DiurnalTrace t;
    t.city_id = city;
    t.local_date = date;
    t.values = values;
    return t;
}

} // namespace

TEST_CASE("qualifying_traces keeps only complete well-covered days") {
    const auto frac = wave_pattern();
    auto bins = day_bins(1, kMonday, frac);
    auto traces = qualifying_traces(bins, 100);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].city_id == 1);
    CHECK(traces[0].local_date == kMonday);
    for (int s = 0; s < 96; ++s) {
        const auto& b = bins[static_cast<std::size_t>(s)];
        CHECK(traces[0].values[static_cast<std::size_t>(s)] ==
              doctest::Approx(static_cast<double>(b.n_on) / (b.n_on + b.n_off)));
    }

    // threshold is strict: a segment at exactly min_online disqualifies the day
    auto weak = bins;
    weak[40].n_on = 100;
    weak[40].n_off = 900;
    CHECK(qualifying_traces(weak, 100).empty());
    weak[40].n_on = 101;
    weak[40].n_off = 899;
    CHECK(qualifying_traces(weak, 100).size() == 1);

    // a missing segment disqualifies the day
    auto partial = bins;
    partial.pop_back();
    CHECK(qualifying_traces(partial, 100).empty());

    // input order is irrelevant
    auto shuffled = bins;
    Rng rng(3);
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.uniform_int(i)]);
    const auto t2 = qualifying_traces(shuffled, 100);
    REQUIRE(t2.size() == 1);
    CHECK(t2[0].values == traces[0].values);
}

TEST_CASE("eligible_city_years applies the minimum-days cut") {
    const auto frac = wave_pattern();
    std::vector<SegmentBin> bins;
    for (int d = 0; d < 30; ++d) {
        auto day = day_bins(1, kMonday + d, frac);
        bins.insert(bins.end(), day.begin(), day.end());
    }
    for (int d = 0; d < 29; ++d) {
        auto day = day_bins(2, kMonday + d, frac);
        bins.insert(bins.end(), day.begin(), day.end());
    }
    const auto eligible = eligible_city_years(bins, 30, 100);
    REQUIRE(eligible.size() == 1);
    CHECK(eligible[0] == std::pair{1, 2006});
    CHECK(eligible_city_years(bins, 29, 100).size() == 2);
}

TEST_CASE("has_all_weekdays") {
    std::vector<DiurnalTrace> traces;
    const auto v = wave_pattern();
    for (int d = 0; d < 6; ++d) traces.push_back(trace_of(1, kMonday + d, v));
    CHECK_FALSE(has_all_weekdays(traces));
    traces.push_back(trace_of(1, kMonday + 6, v));
    CHECK(has_all_weekdays(traces));
}

TEST_CASE("synthetic week: one day per weekday is normalized and smoothed") {
    const auto v = wave_pattern();
    std::vector<DiurnalTrace> traces;
    for (int d = 0; d < 7; ++d) traces.push_back(trace_of(1, kMonday + d, v));
    const auto week = build_synthetic_week(traces, 1, 2006);
    CHECK(week.city_id == 1);
    CHECK(week.year == 2006);

    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    std::vector<double> norm(96);
    for (int s = 0; s < 96; ++s) norm[static_cast<std::size_t>(s)] = (v[static_cast<std::size_t>(s)] - lo) / (hi - lo);
    const auto expected = smooth_robust(norm, 500.0);
    for (std::size_t d = 0; d < 7; ++d)
        for (int s = 0; s < 96; ++s)
            CHECK(week.traces[d][static_cast<std::size_t>(s)] ==
                  doctest::Approx(expected[static_cast<std::size_t>(s)]).epsilon(1e-12));
}

TEST_CASE("synthetic week: mirrored days average to a flat half line") {
    std::array<double, 96> up{}, down{};
    for (int s = 0; s < 96; ++s) {
        up[static_cast<std::size_t>(s)] = s / 95.0;
        down[static_cast<std::size_t>(s)] = 1.0 - s / 95.0;
    }
    std::vector<DiurnalTrace> traces;
    for (int d = 0; d < 7; ++d) traces.push_back(trace_of(1, kMonday + d, up));
    traces.push_back(trace_of(1, kMonday + 7, down)); // second Monday mirrors the first
    const auto week = build_synthetic_week(traces, 1, 2006);
    for (int s = 0; s < 96; ++s)
        CHECK(week.traces[0][static_cast<std::size_t>(s)] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("synthetic week: flat days are skipped, empty weekdays throw") {
    const auto v = wave_pattern();
    std::array<double, 96> flat{};
    flat.fill(0.7);

    std::vector<DiurnalTrace> traces;
    for (int d = 0; d < 7; ++d) traces.push_back(trace_of(1, kMonday + d, v));
    traces.push_back(trace_of(1, kMonday + 7, flat)); // extra flat Monday
    const auto with_flat = build_synthetic_week(traces, 1, 2006);
    const auto without = build_synthetic_week(
        std::vector<DiurnalTrace>(traces.begin(), traces.end() - 1), 1, 2006);
    for (int s = 0; s < 96; ++s)
        CHECK(with_flat.traces[0][static_cast<std::size_t>(s)] ==
              without.traces[0][static_cast<std::size_t>(s)]);

    // a weekday whose only day is flat has no usable information
    std::vector<DiurnalTrace> broken;
    for (int d = 0; d < 6; ++d) broken.push_back(trace_of(1, kMonday + d, v));
    broken.push_back(trace_of(1, kMonday + 6, flat));
    CHECK_THROWS_AS((void)build_synthetic_week(broken, 1, 2006), std::runtime_error);
}

TEST_CASE("synthetic week: a single corrupted day is suppressed") {
    const auto v = wave_pattern();
    auto spiked = v;
    spiked[40] = 3.0; // one absurd segment
    std::vector<DiurnalTrace> traces;
    for (int d = 0; d < 7; ++d) traces.push_back(trace_of(1, kMonday + d, v));
    for (int w = 0; w < 3; ++w) traces.push_back(trace_of(1, kMonday + 7 + 7 * w, v));
    auto with_spike = traces;
    with_spike.push_back(trace_of(1, kMonday + 28, spiked));

    const auto clean = build_synthetic_week(traces, 1, 2006);
    const auto robust = build_synthetic_week(with_spike, 1, 2006);
    double worst = 0.0;
    for (int s = 0; s < 96; ++s)
        worst = std::max(worst, std::fabs(robust.traces[0][static_cast<std::size_t>(s)] -
                                          clean.traces[0][static_cast<std::size_t>(s)]));
    // normalization caps any one day's pull on the five-Monday mean at 1/5
    CHECK(worst < 0.25);
}

namespace {

SyntheticWeek const_week(double value, int year = 2006) {
    SyntheticWeek w;
    w.city_id = 1;
    w.year = year;
    for (auto& t : w.traces) t.fill(value);
    return w;
}

} // namespace

TEST_CASE("gen_features: layout on a constant week") {
    const auto rows = gen_features(const_week(0.4), -33.5);
    REQUIRE(rows.size() == kRowsPerCityYear);
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK(rows[i].segment == static_cast<int>(i) + 2);

    const double approx7 = 0.4 * std::pow(2.0, 3.5); // constant survives as c * sqrt(2)^level
    for (const auto& r : rows) {
        for (int d = 0; d < 7; ++d) {
            CHECK(r.features[static_cast<std::size_t>(d)] == doctest::Approx(0.4));
            CHECK(r.features[static_cast<std::size_t>(7 + d)] == doctest::Approx(0.0));
            CHECK(r.features[static_cast<std::size_t>(14 + d)] == doctest::Approx(0.0));
            // extrema sit at segment 0, outside the feature rows
            CHECK(r.features[static_cast<std::size_t>(21 + d)] == 0.0);
            CHECK(r.features[static_cast<std::size_t>(28 + d)] == 0.0);
        }
        for (int k = 0; k < 6; ++k) CHECK(r.features[static_cast<std::size_t>(35 + k)] == 0.0);
        for (int k = 0; k < 10; ++k)
            CHECK(r.features[static_cast<std::size_t>(41 + k)] == doctest::Approx(approx7).epsilon(1e-9));
        CHECK(r.features[51] == doctest::Approx(33.5));
    }
}

TEST_CASE("gen_features: differences, extremum dummies, year dummies") {
    auto week = const_week(0.2, 2009);
    week.traces[2][40] = 0.9;  // Wednesday peak
    week.traces[2][50] = 0.01; // Wednesday trough
    const auto rows = gen_features(week, 10.0);

    const auto& peak_row = rows[38]; // segment 40
    CHECK(peak_row.segment == 40);
    CHECK(peak_row.features[2] == doctest::Approx(0.9));
    CHECK(peak_row.features[9] == doctest::Approx(0.7));   // first difference
    CHECK(peak_row.features[16] == doctest::Approx(0.7));  // second difference
    CHECK(peak_row.features[23] == 1.0);                   // peak dummy, Wednesday
    CHECK(peak_row.features[30] == 0.0);

    const auto& after = rows[39]; // segment 41
    CHECK(after.features[9] == doctest::Approx(-0.7));
    CHECK(after.features[16] == doctest::Approx(-1.4));

    const auto& trough_row = rows[48]; // segment 50
    CHECK(trough_row.features[30] == 1.0);
    CHECK(trough_row.features[23] == 0.0);

    int peak_hits = 0, trough_hits = 0;
    for (const auto& r : rows) {
        peak_hits += r.features[23] == 1.0;
        trough_hits += r.features[30] == 1.0;
        // year 2009 dummy only
        CHECK(r.features[35] == 0.0);
        CHECK(r.features[36] == 0.0);
        CHECK(r.features[37] == 1.0);
        CHECK(r.features[38] == 0.0);
        CHECK(r.features[39] == 0.0);
        CHECK(r.features[40] == 0.0);
    }
    CHECK(peak_hits == 1);
    CHECK(trough_hits == 1);
}

TEST_CASE("gen_features rejects out-of-range inputs") {
    CHECK_THROWS_AS((void)gen_features(const_week(0.4, 2013), 0.0), std::runtime_error);
    CHECK_THROWS_AS((void)gen_features(const_week(0.4, 2005), 0.0), std::runtime_error);
    CHECK_THROWS_AS((void)gen_features(const_week(0.4), 91.0), std::runtime_error);
    CHECK_THROWS_AS((void)gen_features(const_week(0.4), -90.5), std::runtime_error);
    CHECK_NOTHROW((void)gen_features(const_week(0.4), -90.0));
}

TEST_CASE("feature_names and feature_matrix agree with the row layout") {
    const auto& names = feature_names();
    REQUIRE(names.size() == kFeatureCount);
    CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
    CHECK(names[0] == "level_mon");
    CHECK(names[6] == "level_sun");
    CHECK(names[7] == "diff1_mon");
    CHECK(names[21] == "peak_mon");
    CHECK(names[28] == "trough_mon");
    CHECK(names[35] == "year_2007");
    CHECK(names[40] == "year_2012");
    CHECK(names[41] == "wavelet_0");
    CHECK(names[50] == "wavelet_9");
    CHECK(names[51] == "abs_latitude");

    const auto rows = gen_features(const_week(0.3), 5.0);
    const Matrix m = feature_matrix(rows);
    REQUIRE(m.n_rows == rows.size());
    REQUIRE(m.n_cols == kFeatureCount);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            CHECK(m.at(r, f) == rows[r].features[f]);
}

TEST_CASE("pipeline_features: eligibility, weekday coverage, latitude lookup") {
    const auto frac = wave_pattern();
    std::vector<SegmentBin> bins;
    for (int d = 0; d < 30; ++d) { // city 1: full month from a Monday
        auto day = day_bins(1, kMonday + d, frac);
        bins.insert(bins.end(), day.begin(), day.end());
    }
    for (int w = 0; w < 30; ++w) { // city 2: thirty Mondays
        auto day = day_bins(2, kMonday + 7 * w, frac);
        bins.insert(bins.end(), day.begin(), day.end());
    }
    UrbanBoundary b1;
    b1.city_id = 1;
    b1.country = "AA";
    b1.rings = {{{0.0, 40.0}, {1.0, 40.0}, {1.0, 41.0}, {0.0, 41.0}, {0.0, 40.0}}};
    UrbanBoundary b2 = b1;
    b2.city_id = 2;

    std::vector<std::pair<int, int>> rejected;
    const auto rows = pipeline_features(bins, {b1, b2}, 30, 100, &rejected);
    REQUIRE(rows.size() == kRowsPerCityYear); // only city 1 qualifies
    CHECK(rows[0].city_id == 1);
    CHECK(rows[0].year == 2006);
    CHECK(rows[0].features[51] == doctest::Approx(40.5)); // mean ring latitude
    REQUIRE(rejected.size() == 1);
    CHECK(rejected[0] == std::pair{2, 2006}); // enough days but Mondays only

    CHECK_THROWS_AS((void)pipeline_features(bins, {b2}, 30, 100, nullptr), std::runtime_error);
}

TEST_CASE("label_segments marks midpoints inside the interval") {
    const auto night = label_segments(1320.0, 360.0); // 22:00 -> 06:00, wraps
    int ones = 0;
    for (int s = 0; s < 96; ++s) {
        const bool expect = s >= 88 || s < 24;
        CHECK(night[static_cast<std::size_t>(s)] == (expect ? 1 : 0));
        ones += night[static_cast<std::size_t>(s)];
    }
    CHECK(ones == 32);

    const auto morning = label_segments(0.0, 720.0); // no wrap
    for (int s = 0; s < 96; ++s)
        CHECK(morning[static_cast<std::size_t>(s)] == (s < 48 ? 1 : 0));

    // complement flips every label
    const auto inv = label_segments(360.0, 1320.0);
    for (int s = 0; s < 96; ++s)
        CHECK(night[static_cast<std::size_t>(s)] + inv[static_cast<std::size_t>(s)] == 1);

    CHECK_THROWS_AS((void)label_segments(1440.0, 100.0), std::runtime_error);
    CHECK_THROWS_AS((void)label_segments(-1.0, 100.0), std::runtime_error);
    CHECK_THROWS_AS((void)label_segments(300.0, 300.0), std::runtime_error);
}

TEST_CASE("circular_mean_minutes averages around midnight") {
    CHECK(circular_mean_minutes({1320.0, 0.0}, {1.0, 1.0}) == doctest::Approx(1380.0).epsilon(1e-12));
    CHECK(circular_mean_minutes({360.0, 480.0}, {1.0, 1.0}) == doctest::Approx(420.0).epsilon(1e-12));
    CHECK(circular_mean_minutes({90.0}, {2.0}) == doctest::Approx(90.0).epsilon(1e-12));
    // weight doubles the pull toward midnight
    CHECK(circular_mean_minutes({1320.0, 0.0}, {1.0, 2.0}) ==
          doctest::Approx(1400.4156374440684).epsilon(1e-12));

    CHECK_THROWS_AS((void)circular_mean_minutes({0.0, 720.0}, {1.0, 1.0}), std::runtime_error);
    CHECK_THROWS_AS((void)circular_mean_minutes({}, {}), std::runtime_error);
    CHECK_THROWS_AS((void)circular_mean_minutes({10.0}, {1.0, 2.0}), std::runtime_error);
}

namespace {

SurveyEntry entry(int city, int year, const std::string& resp, int minute, EntryKind kind,
                  double weight = 1.0) {
    SurveyEntry e;
    e.city_id = city;
    e.year = year;
    e.respondent_id = resp;
    e.weight = weight;
    e.entry_time = minute;
    e.entry_kind = kind;
    return e;
}

} // namespace

TEST_CASE("derive_atus_labels: single respondent, window rule") {
    std::vector<SurveyEntry> entries = {
        entry(1, 2006, "r1", 1380, EntryKind::Start), // 23:00
        entry(1, 2006, "r1", 420, EntryKind::Stop),   // 07:00
    };
    const auto labels = derive_atus_labels(entries, 1);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].start_min == doctest::Approx(1380.0));
    CHECK(labels[0].stop_min == doctest::Approx(420.0));
    CHECK(labels[0].n_respondents == 1);

    // first start of the night wins, even when it falls after midnight
    entries.push_back(entry(1, 2006, "r1", 90, EntryKind::Start)); // 01:30 restart
    const auto again = derive_atus_labels(entries, 1);
    CHECK(again[0].start_min == doctest::Approx(1380.0));

    // latest stop before noon wins
    entries.push_back(entry(1, 2006, "r1", 300, EntryKind::Stop));
    const auto third = derive_atus_labels(entries, 1);
    CHECK(third[0].stop_min == doctest::Approx(420.0));
}

TEST_CASE("derive_atus_labels: circular averaging across midnight") {
    // 22:00-06:00 and 00:00-08:00 with equal weights
    const std::vector<SurveyEntry> entries = {
        entry(1, 2006, "a", 1320, EntryKind::Start),
        entry(1, 2006, "a", 360, EntryKind::Stop),
        entry(1, 2006, "b", 0, EntryKind::Start),
        entry(1, 2006, "b", 480, EntryKind::Stop),
    };
    const auto labels = derive_atus_labels(entries, 1);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].start_min == doctest::Approx(1380.0).epsilon(1e-9)); // 23:00
    CHECK(labels[0].stop_min == doctest::Approx(420.0).epsilon(1e-9));
    CHECK(labels[0].n_respondents == 2);
}

TEST_CASE("derive_atus_labels: discards and minimum respondent count") {
    std::vector<SurveyEntry> entries = {
        entry(1, 2006, "ok", 1350, EntryKind::Start),
        entry(1, 2006, "ok", 400, EntryKind::Stop),
        entry(1, 2006, "early", 1110, EntryKind::Start), // 18:30, outside window
        entry(1, 2006, "early", 400, EntryKind::Stop),
        entry(1, 2006, "nostop", 1350, EntryKind::Start),
        entry(1, 2006, "nostop", 780, EntryKind::Stop), // 13:00, outside window
    };
    SurveyStats stats;
    const auto labels = derive_atus_labels(entries, 1, &stats);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].n_respondents == 1);
    CHECK(stats.discarded_respondents == 2);
    CHECK(stats.dropped_city_years == 0);

    const auto strict = derive_atus_labels(entries, 2, &stats);
    CHECK(strict.empty());
    CHECK(stats.dropped_city_years == 1);
}

TEST_CASE("survey CSV reader validates kinds, weights and times") {
    const std::string path = "chrono_survey.tmp";
    write_file(path,
               "city_id,year,respondent_id,weight,entry_time,entry_kind\n"
               "3,2007,r9,1.5,1380,start\n"
               "3,2007,r9,1.5,415,stop\n");
    const auto entries = read_survey_csv(path);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].city_id == 3);
    CHECK(entries[0].year == 2007);
    CHECK(entries[0].respondent_id == "r9");
    CHECK(entries[0].weight == doctest::Approx(1.5));
    CHECK(entries[0].entry_time == 1380);
    CHECK(entries[0].entry_kind == EntryKind::Start);
    CHECK(entries[1].entry_kind == EntryKind::Stop);

    write_file(path, "city_id,year,respondent_id,weight,entry_time,entry_kind\n"
                     "3,2007,r9,1.5,1380,nap\n");
    CHECK_THROWS_AS((void)read_survey_csv(path), std::runtime_error);
    write_file(path, "city_id,year,respondent_id,weight,entry_time,entry_kind\n"
                     "3,2007,r9,0,1380,start\n");
    CHECK_THROWS_AS((void)read_survey_csv(path), std::runtime_error);
    write_file(path, "city_id,year,respondent_id,weight,entry_time,entry_kind\n"
                     "3,2007,r9,1.0,1440,start\n");
    CHECK_THROWS_AS((void)read_survey_csv(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("join_labels keeps only labeled city-years") {
    auto rows = gen_features(const_week(0.3), 5.0);
    auto other = gen_features(const_week(0.35, 2007), 5.0);
    for (auto& r : other) r.city_id = 2;
    rows.insert(rows.end(), other.begin(), other.end());

    AtusLabel lab;
    lab.city_id = 1;
    lab.year = 2006;
    lab.start_min = 1320.0;
    lab.stop_min = 360.0;
    const auto set = join_labels(rows, {lab});
    REQUIRE(set.rows.size() == kRowsPerCityYear);
    REQUIRE(set.labels.size() == kRowsPerCityYear);
    const auto expect = label_segments(1320.0, 360.0);
    for (std::size_t i = 0; i < set.rows.size(); ++i) {
        CHECK(set.rows[i].city_id == 1);
        CHECK(set.labels[i] == expect[static_cast<std::size_t>(set.rows[i].segment)]);
    }
}

TEST_CASE("quality_filter counts strict threshold crossings") {
    std::vector<double> scores(kRowsPerCityYear, 0.5);
    for (int i = 0; i < 15; ++i) scores[static_cast<std::size_t>(i)] = 0.95;
    for (int i = 15; i < 34; ++i) scores[static_cast<std::size_t>(i)] = 0.05;
    CHECK_FALSE(quality_filter(scores)); // 19 low, needs 20
    scores[34] = 0.05;
    CHECK(quality_filter(scores));
    scores[0] = 0.9; // boundary value does not count as high
    CHECK_FALSE(quality_filter(scores));

    std::vector<double> flat(kRowsPerCityYear, 0.5);
    CHECK_FALSE(quality_filter(flat));
    std::vector<double> rect(kRowsPerCityYear, 0.0);
    for (int i = 0; i < 30; ++i) rect[static_cast<std::size_t>(i)] = 1.0;
    CHECK(quality_filter(rect));

    CHECK_THROWS_AS((void)quality_filter(std::vector<double>(93, 0.0)), std::runtime_error);
}

namespace {

std::vector<double> rect_scores(double start, double stop) {
    const auto lab = label_segments(start, stop);
    std::vector<double> scores;
    for (int s = 2; s < 96; ++s) scores.push_back(lab[static_cast<std::size_t>(s)]);
    return scores;
}

double circ_err(double a, double b) {
    const double d = std::fabs(a - b);
    return std::min(d, 1440.0 - d);
}

} // namespace

TEST_CASE("scores_to_times: ideal rectangles map back to their edges") {
    const auto t = scores_to_times(7, 2008, rect_scores(1320.0, 390.0)); // 22:00 -> 06:30
    CHECK(t.city_id == 7);
    CHECK(t.year == 2008);
    CHECK(circ_err(t.start_min, 1320.0) < 7.5);
    CHECK(circ_err(t.stop_min, 390.0) < 7.5);
    CHECK(t.duration_h ==
          doctest::Approx(std::fmod(t.stop_min - t.start_min + 1440.0, 1440.0) / 60.0)
              .epsilon(1e-12));

    // a sweep of grid-aligned placements away from the unscored midnight gap
    for (int start = 1260; start <= 1425; start += 45)
        for (int dur = 360; dur <= 585; dur += 75) {
            double stop = start + dur;
            while (stop >= 1440) stop -= 1440;
            const auto r = scores_to_times(1, 2006, rect_scores(start, stop));
            CHECK(circ_err(r.start_min, start) < 7.5);
            CHECK(circ_err(r.stop_min, stop) < 7.5);
        }

    CHECK_THROWS_AS((void)scores_to_times(1, 2006, std::vector<double>(96, 0.0)),
                    std::runtime_error);
}

TEST_CASE("scores_to_times: shifting the rectangle shifts both edges") {
    const auto base = scores_to_times(1, 2006, rect_scores(1320.0, 390.0));
    const auto moved = scores_to_times(1, 2006, rect_scores(1380.0, 450.0));
    CHECK(std::fabs(moved.start_min - base.start_min - 60.0) < 1e-3);
    CHECK(std::fabs(moved.stop_min - base.stop_min - 60.0) < 1e-3);
    CHECK(std::fabs(moved.duration_h - base.duration_h) < 1e-4);
}

TEST_CASE("predict_sleep and crossvalidate_by_city on planted schedules") {
    // two cities, one year each, features that directly encode the label
    const double start1 = 1320.0, stop1 = 390.0;  // city 1
    const double start2 = 1380.0, stop2 = 450.0;  // city 2
    std::vector<FeatureRow> rows;
    std::vector<int> labels;
    Rng rng(5);
    for (int city = 1; city <= 2; ++city) {
        const auto lab = label_segments(city == 1 ? start1 : start2, city == 1 ? stop1 : stop2);
        for (int s = 2; s < 96; ++s) {
            FeatureRow r;
            r.city_id = city;
            r.year = 2006;
            r.segment = s;
            r.features.fill(0.0);
            const int y = lab[static_cast<std::size_t>(s)];
            r.features[0] = y + 0.05 * rng.normal();
            r.features[1] = rng.normal(); // distractor
            rows.push_back(r);
            labels.push_back(y);
        }
    }

    ForestConfig cfg;
    cfg.n_trees = 60;
    cfg.mtry = 52; // 50 of the features are dead weight here
    cfg.seed = 17;
    const auto cv = crossvalidate_by_city(rows, labels, cfg);
    CHECK(cv.n_folds == 2);
    CHECK(cv.accuracy >= 0.95);
    REQUIRE(cv.times.size() == 2);
    CHECK(cv.low_confidence.empty());
    CHECK(cv.times[0].city_id == 1);
    CHECK(circ_err(cv.times[0].start_min, start1) < 7.5);
    CHECK(circ_err(cv.times[0].stop_min, stop1) < 7.5);
    CHECK(cv.times[1].city_id == 2);
    CHECK(circ_err(cv.times[1].start_min, start2) < 7.5);
    CHECK(circ_err(cv.times[1].stop_min, stop2) < 7.5);

    // predict_sleep with the trained model mirrors the conversion path
    const auto ens = train_forest(feature_matrix(rows), labels, cfg);
    const auto out = predict_sleep(ens, rows);
    REQUIRE(out.times.size() == 2);
    CHECK(circ_err(out.times[0].start_min, start1) < 7.5);
    CHECK(out.low_confidence.empty());

    // flat scores land in low_confidence rather than times
    std::vector<FeatureRow> flat_rows;
    for (int s = 2; s < 96; ++s) {
        FeatureRow r;
        r.city_id = 9;
        r.year = 2006;
        r.segment = s;
        r.features.fill(0.5);
        flat_rows.push_back(r);
    }
    const auto flat_out = predict_sleep(ens, flat_rows);
    CHECK(flat_out.times.empty());
    REQUIRE(flat_out.low_confidence.size() == 1);
    CHECK(flat_out.low_confidence[0] == std::pair{9, 2006});

    // incomplete segment groups are rejected
    auto missing = rows;
    missing.pop_back();
    CHECK_THROWS_AS((void)predict_sleep(ens, missing), std::runtime_error);
    CHECK_THROWS_AS((void)crossvalidate_by_city(rows, std::vector<int>(3, 0), cfg),
                    std::runtime_error);
    std::vector<FeatureRow> one_city(rows.begin(), rows.begin() + kRowsPerCityYear);
    std::vector<int> one_labels(labels.begin(), labels.begin() + kRowsPerCityYear);
    CHECK_THROWS_AS((void)crossvalidate_by_city(one_city, one_labels, cfg), std::runtime_error);
}

TEST_CASE("write_times_csv") {
    SleepTimes t;
    t.city_id = 4;
    t.year = 2011;
    t.start_min = 1332.5;
    t.stop_min = 395.0;
    t.duration_h = 8.375;
    const auto table = CsvTable::from_string(write_times_csv({t}));
    REQUIRE(table.rows() == 1);
    CHECK(table.integer(0, table.column("city_id")) == 4);
    CHECK(table.integer(0, table.column("year")) == 2011);
    CHECK(table.num(0, table.column("start_min")) == doctest::Approx(1332.5));
    CHECK(table.num(0, table.column("stop_min")) == doctest::Approx(395.0));
    CHECK(table.num(0, table.column("duration_h")) == doctest::Approx(8.375));
}
