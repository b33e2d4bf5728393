#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "netpulse/aggregate.hpp"
#include "netpulse/forest.hpp"

namespace netpulse {

// fraction online per 15-minute segment of one local day
struct DiurnalTrace {
    int city_id = 0;
    std::int64_t local_date = 0; // days since epoch
    std::array<double, 96> values{};
};

// per-weekday average of a city-year's normalized daily traces, smoothed
struct SyntheticWeek {
    int city_id = 0;
    int year = 0;
    std::array<std::array<double, 96>, 7> traces{}; // Mon..Sun
};

struct FeatureRow {
    int city_id = 0;
    int year = 0;
    int segment = 0; // 2..95; the first two segments lack second differences
    std::array<double, 52> features{};
};

constexpr int kFeatureCount = 52;
constexpr int kRowsPerCityYear = 94;

struct SleepTimes {
    int city_id = 0;
    int year = 0;
    double start_min = 0.0, stop_min = 0.0; // minutes of local day
    double duration_h = 0.0;
};

// Days where all 96 segments are present and each has more than min_online
// addresses online; these are the days all downstream steps use.
std::vector<DiurnalTrace> qualifying_traces(const std::vector<SegmentBin>& bins,
                                            std::int64_t min_online = 100);

// (city, year) pairs with at least min_days qualifying days, sorted
std::vector<std::pair<int, int>> eligible_city_years(const std::vector<SegmentBin>& bins,
                                                     int min_days = 30,
                                                     std::int64_t min_online = 100);

bool has_all_weekdays(const std::vector<DiurnalTrace>& traces);

// Per-day min-max normalization, per-weekday mean, then robust smoothing
// (lambda = 500) per weekday. Throws when a weekday has no usable day.
SyntheticWeek build_synthetic_week(const std::vector<DiurnalTrace>& traces, int city_id,
                                   int year, double smooth_lambda = 500.0);

// 94 rows (segments 2..95), 52 features each:
//   [0,7)   fraction online per weekday at the segment
//   [7,14)  first differences
//   [14,21) second differences
//   [21,28) peak dummies        (earliest segment wins ties)
//   [28,35) trough dummies
//   [35,41) year dummies 2007..2012 (2006 is the reference year)
//   [41,51) level-7 approximation coefficients of the 672-sample week
//   [51]    absolute latitude in degrees
std::vector<FeatureRow> gen_features(const SyntheticWeek& week, double latitude_deg);

Matrix feature_matrix(const std::vector<FeatureRow>& rows);

const std::vector<std::string>& feature_names(); // 52 entries, same order

// bins -> eligibility -> synthetic weeks -> features, for every eligible
// city-year; city-years without full weekday coverage land in rejected
std::vector<FeatureRow> pipeline_features(const std::vector<SegmentBin>& bins,
                                          const std::vector<UrbanBoundary>& boundaries,
                                          int min_days = 30, std::int64_t min_online = 100,
                                          std::vector<std::pair<int, int>>* rejected = nullptr);

// label 1 iff the segment midpoint falls in [start, stop) modulo 24h
std::array<std::uint8_t, 96> label_segments(double start_min, double stop_min);

// --- survey labels ---------------------------------------------------------

enum class EntryKind { Start, Stop };

struct SurveyEntry {
    int city_id = 0;
    int year = 0;
    std::string respondent_id;
    double weight = 0.0;
    int entry_time = 0; // minutes of day
    EntryKind entry_kind = EntryKind::Start;
};

// columns: city_id,year,respondent_id,weight,entry_time,entry_kind
std::vector<SurveyEntry> read_survey_csv(const std::string& path);

struct AtusLabel {
    int city_id = 0;
    int year = 0;
    double start_min = 0.0, stop_min = 0.0;
    std::size_t n_respondents = 0;
};

struct SurveyStats {
    std::size_t discarded_respondents = 0; // no valid in-window start or stop
    std::size_t dropped_city_years = 0;    // below the respondent minimum
};

// weighted circular mean of minutes-of-day; throws when the mean direction
// is undefined (resultant length ~ 0)
double circular_mean_minutes(const std::vector<double>& minutes,
                             const std::vector<double>& weights);

// Sleep start: a respondent's first start entry in the overnight window
// (strictly after 19:00, strictly before noon, wrapping midnight).
// Sleep stop: their last stop entry in the same window.
// Respondents lacking either are discarded; city-years with fewer than
// min_respondents kept respondents are dropped. Averaging is circular.
std::vector<AtusLabel> derive_atus_labels(const std::vector<SurveyEntry>& entries,
                                          std::size_t min_respondents = 10,
                                          SurveyStats* stats = nullptr);

// rows restricted to labeled city-years, with per-segment binary labels
struct TrainingSet {
    std::vector<FeatureRow> rows;
    std::vector<int> labels;
};
TrainingSet join_labels(const std::vector<FeatureRow>& rows,
                        const std::vector<AtusLabel>& labels);

// --- score conversion ------------------------------------------------------

// scores indexed by segment 2..95 (94 values)
bool quality_filter(const std::vector<double>& scores, int min_high = 15, int min_low = 20,
                    double high = 0.9, double low = 0.1);

// Shift so 16:00 is the origin, lightly smooth across the two-segment gap,
// differentiate, denoise, and read both sleep edges off interpolating
// splines split at 3 am. Caller checks quality_filter first.
SleepTimes scores_to_times(int city_id, int year, const std::vector<double>& scores);

struct PredictOutcome {
    std::vector<SleepTimes> times;
    std::vector<std::pair<int, int>> low_confidence; // city-years failing the filter
};
PredictOutcome predict_sleep(const TreeEnsemble& ens, const std::vector<FeatureRow>& rows);

struct CrossValResult {
    double accuracy = 0.0; // pooled held-out accuracy at threshold 0.5
    std::size_t n_folds = 0;
    std::vector<SleepTimes> times;
    std::vector<std::pair<int, int>> low_confidence;
};

// leave-one-city-out over all years of the held-out city
CrossValResult crossvalidate_by_city(const std::vector<FeatureRow>& rows,
                                     const std::vector<int>& labels, const ForestConfig& cfg);

std::string write_times_csv(const std::vector<SleepTimes>& times);

} // namespace netpulse
