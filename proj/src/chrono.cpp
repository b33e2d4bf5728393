#include "netpulse/chrono.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "netpulse/csv.hpp"
#include "netpulse/dates.hpp"
#include "netpulse/smoothing.hpp"
#include "netpulse/spline.hpp"
#include "netpulse/wavelet.hpp"

namespace netpulse {

namespace {
constexpr double kMinutesPerDay = 1440.0;
constexpr double kTau = 6.283185307179586476925286766559;

double positive_mod(double v, double m) {
    double r = std::fmod(v, m);
    return r < 0 ? r + m : r;
}
} // namespace

std::vector<DiurnalTrace> qualifying_traces(const std::vector<SegmentBin>& raw,
                                            std::int64_t min_online) {
    // a qualifying day has exactly the 96 segments, each with n_on above
    // the threshold
    std::vector<SegmentBin> bins = raw;
    std::sort(bins.begin(), bins.end(), [](const SegmentBin& a, const SegmentBin& b) {
        return std::tuple{a.city_id, a.local_date, a.segment} <
               std::tuple{b.city_id, b.local_date, b.segment};
    });
    std::vector<DiurnalTrace> out;
    std::size_t i = 0;
    while (i < bins.size()) {
        const int city = bins[i].city_id;
        const std::int64_t date = bins[i].local_date;
        std::size_t j = i;
        while (j < bins.size() && bins[j].city_id == city && bins[j].local_date == date) ++j;
        if (j - i == 96) {
            bool ok = true;
            DiurnalTrace t;
            t.city_id = city;
            t.local_date = date;
            for (std::size_t k = i; k < j && ok; ++k) {
                const auto& b = bins[k];
                if (b.segment != static_cast<int>(k - i) || b.n_on <= min_online) {
                    ok = false;
                    break;
                }
                t.values[static_cast<std::size_t>(b.segment)] = fraction_online(b);
            }
            if (ok) out.push_back(t);
        }
        i = j;
    }
    return out;
}

std::vector<std::pair<int, int>> eligible_city_years(const std::vector<SegmentBin>& bins,
                                                     int min_days, std::int64_t min_online) {
    std::map<std::pair<int, int>, int> days;
    for (const auto& t : qualifying_traces(bins, min_online))
        ++days[{t.city_id, civil_from_days(t.local_date).year}];
    std::vector<std::pair<int, int>> out;
    for (const auto& [key, n] : days)
        if (n >= min_days) out.push_back(key);
    return out;
}

bool has_all_weekdays(const std::vector<DiurnalTrace>& traces) {
    std::array<bool, 7> seen{};
    for (const auto& t : traces) seen[static_cast<std::size_t>(weekday_from_days(t.local_date))] = true;
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

SyntheticWeek build_synthetic_week(const std::vector<DiurnalTrace>& traces, int city_id,
                                   int year, double smooth_lambda) {
    std::array<std::array<double, 96>, 7> sum{};
    std::array<int, 7> count{};
    for (const auto& t : traces) {
        double lo = t.values[0], hi = t.values[0];
        for (double v : t.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi <= lo) continue; // flat day carries no diurnal information
        const int wd = weekday_from_days(t.local_date);
        for (std::size_t s = 0; s < 96; ++s)
            sum[static_cast<std::size_t>(wd)][s] += (t.values[s] - lo) / (hi - lo);
        ++count[static_cast<std::size_t>(wd)];
    }
    SyntheticWeek week;
    week.city_id = city_id;
    week.year = year;
    for (std::size_t d = 0; d < 7; ++d) {
        if (count[d] == 0)
            throw std::runtime_error("synthetic week: no usable day for weekday " +
                                     std::to_string(d));
        std::vector<double> trace(96);
        for (std::size_t s = 0; s < 96; ++s) trace[s] = sum[d][s] / count[d];
        auto smoothed = smooth_robust(trace, smooth_lambda);
        std::copy(smoothed.begin(), smoothed.end(), week.traces[d].begin());
    }
    return week;
}

std::vector<FeatureRow> gen_features(const SyntheticWeek& week, double latitude_deg) {
    if (!(latitude_deg >= -90.0 && latitude_deg <= 90.0))
        throw std::runtime_error("latitude out of range: " + std::to_string(latitude_deg));
    if (week.year < 2006 || week.year > 2012)
        throw std::runtime_error("year outside study window: " + std::to_string(week.year));

    std::array<int, 7> peak{}, trough{};
    for (std::size_t d = 0; d < 7; ++d) {
        const auto& t = week.traces[d];
        int pk = 0, tr = 0;
        for (int s = 1; s < 96; ++s) {
            if (t[static_cast<std::size_t>(s)] > t[static_cast<std::size_t>(pk)]) pk = s;
            if (t[static_cast<std::size_t>(s)] < t[static_cast<std::size_t>(tr)]) tr = s;
        }
        peak[d] = pk;
        trough[d] = tr;
    }

    std::vector<double> weekly(7 * 96);
    for (std::size_t d = 0; d < 7; ++d)
        for (std::size_t s = 0; s < 96; ++s) weekly[d * 96 + s] = week.traces[d][s];
    const auto coarse = wavedec_approx(weekly, sym3(), 7);
    if (coarse.size() != 10)
        throw std::runtime_error("weekly wavelet compression produced " +
                                 std::to_string(coarse.size()) + " coefficients, expected 10");

    std::vector<FeatureRow> rows;
    rows.reserve(kRowsPerCityYear);
    for (int s = 2; s < 96; ++s) {
        FeatureRow r;
        r.city_id = week.city_id;
        r.year = week.year;
        r.segment = s;
        for (std::size_t d = 0; d < 7; ++d) {
            const auto& t = week.traces[d];
            const double v0 = t[static_cast<std::size_t>(s)];
            const double v1 = t[static_cast<std::size_t>(s - 1)];
            const double v2 = t[static_cast<std::size_t>(s - 2)];
            r.features[d] = v0;
            r.features[7 + d] = v0 - v1;
            r.features[14 + d] = v0 - 2.0 * v1 + v2;
            r.features[21 + d] = peak[d] == s ? 1.0 : 0.0;
            r.features[28 + d] = trough[d] == s ? 1.0 : 0.0;
        }
        for (int y = 2007; y <= 2012; ++y)
            r.features[static_cast<std::size_t>(35 + y - 2007)] = week.year == y ? 1.0 : 0.0;
        for (std::size_t k = 0; k < 10; ++k) r.features[41 + k] = coarse[k];
        r.features[51] = std::fabs(latitude_deg);
        rows.push_back(r);
    }
    return rows;
}

Matrix feature_matrix(const std::vector<FeatureRow>& rows) {
    Matrix m(rows.size(), kFeatureCount);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t f = 0; f < kFeatureCount; ++f) m.at(i, f) = rows[i].features[f];
    return m;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        static const char* days[7] = {"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
        std::vector<std::string> v;
        for (const char* prefix : {"level_", "diff1_", "diff2_", "peak_", "trough_"})
            for (const char* d : days) v.push_back(prefix + std::string(d));
        for (int y = 2007; y <= 2012; ++y) v.push_back("year_" + std::to_string(y));
        for (int k = 0; k < 10; ++k) v.push_back("wavelet_" + std::to_string(k));
        v.push_back("abs_latitude");
        return v;
    }();
    return names;
}

std::vector<FeatureRow> pipeline_features(const std::vector<SegmentBin>& bins,
                                          const std::vector<UrbanBoundary>& boundaries,
                                          int min_days, std::int64_t min_online,
                                          std::vector<std::pair<int, int>>* rejected) {
    std::map<int, double> latitude;
    for (const auto& b : boundaries) latitude[b.city_id] = boundary_latitude(b);

    const auto traces = qualifying_traces(bins, min_online);
    std::map<std::pair<int, int>, std::vector<DiurnalTrace>> by_city_year;
    for (const auto& t : traces)
        by_city_year[{t.city_id, civil_from_days(t.local_date).year}].push_back(t);

    std::vector<FeatureRow> rows;
    if (rejected) rejected->clear();
    for (const auto& [key, days] : by_city_year) {
        if (days.size() < static_cast<std::size_t>(min_days)) continue;
        auto lat = latitude.find(key.first);
        if (lat == latitude.end())
            throw std::runtime_error("no boundary for city " + std::to_string(key.first));
        if (!has_all_weekdays(days)) {
            if (rejected) rejected->push_back(key);
            continue;
        }
        const auto week = build_synthetic_week(days, key.first, key.second);
        auto r = gen_features(week, lat->second);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
}

std::array<std::uint8_t, 96> label_segments(double start_min, double stop_min) {
    if (!(start_min >= 0 && start_min < kMinutesPerDay) ||
        !(stop_min >= 0 && stop_min < kMinutesPerDay))
        throw std::runtime_error("sleep times must lie in [0, 1440)");
    if (start_min == stop_min) throw std::runtime_error("empty sleep interval");
    std::array<std::uint8_t, 96> labels{};
    for (int s = 0; s < 96; ++s) {
        const double mid = 15.0 * s + 7.5;
        const bool in = start_min < stop_min ? (mid >= start_min && mid < stop_min)
                                             : (mid >= start_min || mid < stop_min);
        labels[static_cast<std::size_t>(s)] = in ? 1 : 0;
    }
    return labels;
}

std::vector<SurveyEntry> read_survey_csv(const std::string& path) {
    const auto table = CsvTable::from_file(path);
    const auto c_city = table.column("city_id");
    const auto c_year = table.column("year");
    const auto c_resp = table.column("respondent_id");
    const auto c_weight = table.column("weight");
    const auto c_time = table.column("entry_time");
    const auto c_kind = table.column("entry_kind");
    std::vector<SurveyEntry> out;
    out.reserve(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        SurveyEntry e;
        e.city_id = static_cast<int>(table.integer(r, c_city));
        e.year = static_cast<int>(table.integer(r, c_year));
        e.respondent_id = table.cell(r, c_resp);
        e.weight = table.num(r, c_weight);
        e.entry_time = static_cast<int>(table.integer(r, c_time));
        const auto& kind = table.cell(r, c_kind);
        if (kind == "start")
            e.entry_kind = EntryKind::Start;
        else if (kind == "stop")
            e.entry_kind = EntryKind::Stop;
        else
            throw std::runtime_error(path + ": unknown entry_kind '" + kind + "'");
        if (e.weight <= 0) throw std::runtime_error(path + ": weight must be positive");
        if (e.entry_time < 0 || e.entry_time >= 1440)
            throw std::runtime_error(path + ": entry_time outside [0, 1440)");
        out.push_back(std::move(e));
    }
    return out;
}

double circular_mean_minutes(const std::vector<double>& minutes,
                             const std::vector<double>& weights) {
    if (minutes.empty() || minutes.size() != weights.size())
        throw std::runtime_error("circular mean: bad input sizes");
    double cx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < minutes.size(); ++i) {
        const double a = kTau * minutes[i] / kMinutesPerDay;
        cx += weights[i] * std::cos(a);
        sy += weights[i] * std::sin(a);
    }
    if (std::hypot(cx, sy) < 1e-12)
        throw std::runtime_error("circular mean undefined: opposing times cancel");
    return positive_mod(std::atan2(sy, cx) / kTau * kMinutesPerDay, kMinutesPerDay);
}

std::vector<AtusLabel> derive_atus_labels(const std::vector<SurveyEntry>& entries,
                                          std::size_t min_respondents, SurveyStats* stats) {
    // the overnight diary window opens strictly after 7 pm and closes strictly
    // before noon, wrapping midnight; entries outside it are discarded
    constexpr int kEveningCut = 19 * 60;
    constexpr int kNoonCut = 12 * 60;
    const auto in_window = [](int t) { return t > kEveningCut || t < kNoonCut; };
    const auto window_pos = [](int t) { return (t - kEveningCut + 1440) % 1440; };

    struct Resp {
        double weight = 0.0;
        int start = -1, stop = -1;
    };
    std::map<std::tuple<int, int, std::string>, Resp> resp;
    for (const auto& e : entries) {
        auto& r = resp[{e.city_id, e.year, e.respondent_id}];
        r.weight = e.weight;
        if (!in_window(e.entry_time)) continue;
        if (e.entry_kind == EntryKind::Start) {
            // first start of the night
            if (r.start < 0 || window_pos(e.entry_time) < window_pos(r.start))
                r.start = e.entry_time;
        } else {
            // last stop before noon
            if (r.stop < 0 || window_pos(e.entry_time) > window_pos(r.stop))
                r.stop = e.entry_time;
        }
    }

    struct Group {
        std::vector<double> starts, stops, weights;
    };
    std::map<std::pair<int, int>, Group> groups;
    std::size_t discarded = 0;
    for (const auto& [key, r] : resp) {
        if (r.start < 0 || r.stop < 0) {
            ++discarded;
            continue;
        }
        auto& g = groups[{std::get<0>(key), std::get<1>(key)}];
        g.starts.push_back(r.start);
        g.stops.push_back(r.stop);
        g.weights.push_back(r.weight);
    }

    std::vector<AtusLabel> out;
    std::size_t dropped = 0;
    for (const auto& [key, g] : groups) {
        if (g.starts.size() < min_respondents) {
            ++dropped;
            continue;
        }
        AtusLabel lab;
        lab.city_id = key.first;
        lab.year = key.second;
        lab.start_min = circular_mean_minutes(g.starts, g.weights);
        lab.stop_min = circular_mean_minutes(g.stops, g.weights);
        lab.n_respondents = g.starts.size();
        out.push_back(lab);
    }
    if (stats) {
        stats->discarded_respondents = discarded;
        stats->dropped_city_years = dropped;
    }
    return out;
}

TrainingSet join_labels(const std::vector<FeatureRow>& rows,
                        const std::vector<AtusLabel>& labels) {
    std::map<std::pair<int, int>, std::array<std::uint8_t, 96>> by_city_year;
    for (const auto& l : labels)
        by_city_year[{l.city_id, l.year}] = label_segments(l.start_min, l.stop_min);
    TrainingSet set;
    for (const auto& r : rows) {
        auto it = by_city_year.find({r.city_id, r.year});
        if (it == by_city_year.end()) continue;
        set.rows.push_back(r);
        set.labels.push_back(it->second[static_cast<std::size_t>(r.segment)]);
    }
    return set;
}

bool quality_filter(const std::vector<double>& scores, int min_high, int min_low, double high,
                    double low) {
    if (scores.size() != kRowsPerCityYear)
        throw std::runtime_error("quality filter expects 94 scores, got " +
                                 std::to_string(scores.size()));
    int n_high = 0, n_low = 0;
    for (double s : scores) {
        if (s > high) ++n_high;
        if (s < low) ++n_low;
    }
    return n_high >= min_high && n_low >= min_low;
}

SleepTimes scores_to_times(int city_id, int year, const std::vector<double>& scores) {
    if (scores.size() != kRowsPerCityYear)
        throw std::runtime_error("score conversion expects 94 scores");

    // rotate so index 0 is 16:00; the two unscored segments (00:00, 00:15)
    // land mid-array and are bridged by zero-weight smoothing
    std::vector<double> y(96, 0.0), w(96, 1.0);
    for (int i = 0; i < 96; ++i) {
        const int seg = (64 + i) % 96;
        if (seg >= 2)
            y[static_cast<std::size_t>(i)] = scores[static_cast<std::size_t>(seg - 2)];
        else
            w[static_cast<std::size_t>(i)] = 0.0;
    }
    const auto z = smooth_weighted(y, w, 0.06);

    // d[i] sits on the boundary between segments i and i+1: minute 15*(i+1)
    std::vector<double> d(95), u(95);
    for (int i = 0; i < 95; ++i) {
        d[static_cast<std::size_t>(i)] =
            z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(i + 1)];
        u[static_cast<std::size_t>(i)] = 15.0 * (i + 1);
    }
    const auto dd = denoise_level1(d, sym8());

    // 3 am (minute 660 after 16:00) splits falling-asleep from waking
    constexpr int kSplit = 43; // u[43] = 660
    std::vector<double> ux(u.begin(), u.begin() + kSplit + 1);
    std::vector<double> dx(dd.begin(), dd.begin() + kSplit + 1);
    CubicSpline to_sleep(std::move(ux), std::move(dx));
    std::vector<double> uy(u.begin() + kSplit, u.end());
    std::vector<double> dy(dd.begin() + kSplit, dd.end());
    CubicSpline wake(std::move(uy), std::move(dy));

    const double start_u = to_sleep.argmin();
    const double stop_u = wake.argmax();

    SleepTimes t;
    t.city_id = city_id;
    t.year = year;
    t.start_min = positive_mod(960.0 + start_u, kMinutesPerDay);
    t.stop_min = positive_mod(960.0 + stop_u, kMinutesPerDay);
    t.duration_h = positive_mod(t.stop_min - t.start_min, kMinutesPerDay) / 60.0;
    return t;
}

namespace {

// rows grouped by (city, year), ordered by segment; throws unless each group
// is exactly the 94 segments 2..95
std::map<std::pair<int, int>, std::vector<std::size_t>> group_city_years(
    const std::vector<FeatureRow>& rows) {
    std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < rows.size(); ++i)
        groups[{rows[i].city_id, rows[i].year}].push_back(i);
    for (auto& [key, idx] : groups) {
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return rows[a].segment < rows[b].segment; });
        if (idx.size() != kRowsPerCityYear)
            throw std::runtime_error("city " + std::to_string(key.first) + " year " +
                                     std::to_string(key.second) + " has " +
                                     std::to_string(idx.size()) + " rows, expected 94");
        for (std::size_t k = 0; k < idx.size(); ++k)
            if (rows[idx[k]].segment != static_cast<int>(k) + 2)
                throw std::runtime_error("city " + std::to_string(key.first) +
                                         ": segments must cover 2..95 exactly once");
    }
    return groups;
}

void convert_groups(const std::map<std::pair<int, int>, std::vector<std::size_t>>& groups,
                    const std::vector<double>& scores, std::vector<SleepTimes>& times,
                    std::vector<std::pair<int, int>>& low_confidence) {
    for (const auto& [key, idx] : groups) {
        std::vector<double> s;
        s.reserve(idx.size());
        for (auto i : idx) s.push_back(scores[i]);
        if (!quality_filter(s)) {
            low_confidence.push_back(key);
            continue;
        }
        times.push_back(scores_to_times(key.first, key.second, s));
    }
}

} // namespace

PredictOutcome predict_sleep(const TreeEnsemble& ens, const std::vector<FeatureRow>& rows) {
    const auto groups = group_city_years(rows);
    const auto scores = ens.predict(feature_matrix(rows));
    PredictOutcome out;
    convert_groups(groups, scores, out.times, out.low_confidence);
    return out;
}

CrossValResult crossvalidate_by_city(const std::vector<FeatureRow>& rows,
                                     const std::vector<int>& labels, const ForestConfig& cfg) {
    if (rows.size() != labels.size())
        throw std::runtime_error("cross-validation: rows/labels size mismatch");
    std::set<int> cities;
    for (const auto& r : rows) cities.insert(r.city_id);
    if (cities.size() < 2) throw std::runtime_error("cross-validation needs at least 2 cities");

    CrossValResult res;
    res.n_folds = cities.size();
    std::size_t hits = 0;
    for (int held : cities) {
        std::vector<FeatureRow> train_rows, test_rows;
        std::vector<int> train_labels, test_labels;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].city_id == held) {
                test_rows.push_back(rows[i]);
                test_labels.push_back(labels[i]);
            } else {
                train_rows.push_back(rows[i]);
                train_labels.push_back(labels[i]);
            }
        }
        const auto ens = train_forest(feature_matrix(train_rows), train_labels, cfg);
        const auto scores = ens.predict(feature_matrix(test_rows));
        for (std::size_t i = 0; i < scores.size(); ++i)
            hits += (scores[i] >= 0.5 ? 1 : 0) == test_labels[i];
        const auto groups = group_city_years(test_rows);
        convert_groups(groups, scores, res.times, res.low_confidence);
    }
    res.accuracy = static_cast<double>(hits) / static_cast<double>(rows.size());
    std::sort(res.times.begin(), res.times.end(), [](const SleepTimes& a, const SleepTimes& b) {
        return std::pair{a.city_id, a.year} < std::pair{b.city_id, b.year};
    });
    return res;
}

std::string write_times_csv(const std::vector<SleepTimes>& times) {
    CsvWriter w({"city_id", "year", "start_min", "stop_min", "duration_h"});
    for (const auto& t : times) {
        w.field(t.city_id).field(t.year).field(t.start_min).field(t.stop_min).field(t.duration_h);
        w.end_row();
    }
    return w.str();
}

} // namespace netpulse
