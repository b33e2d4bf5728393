#include "netpulse/aggregate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "netpulse/csv.hpp"

namespace netpulse {

using nlohmann::json;

std::vector<UrbanBoundary> read_boundaries(const std::string& path) {
    json root = json::parse(read_file(path));
    if (!root.contains("features") || !root["features"].is_array())
        throw std::runtime_error(path + ": boundary file needs a 'features' array");
    std::vector<UrbanBoundary> out;
    for (const json& feat : root["features"]) {
        const json& props = feat.at("properties");
        UrbanBoundary b;
        b.city_id = props.at("city_id").get<int>();
        b.country = props.at("country").get<std::string>();
        b.utc_offset_minutes = props.at("utc_offset_minutes").get<int>();
        b.population_2000 = props.at("pop2000").get<double>();
        b.population_2010 = props.at("pop2010").get<double>();
        if (std::abs(b.utc_offset_minutes) > 14 * 60)
            throw std::runtime_error(path + ": utc_offset_minutes out of range for city " +
                                     std::to_string(b.city_id));
        const json& geom = feat.at("geometry");
        const std::string type = geom.at("type").get<std::string>();
        auto read_ring = [&](const json& ring_json) {
            std::vector<std::pair<double, double>> ring;
            for (const json& pt : ring_json)
                ring.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
            if (ring.size() < 4 || ring.front() != ring.back())
                throw std::runtime_error(path + ": ring not closed for city " +
                                         std::to_string(b.city_id));
            return ring;
        };
        if (type == "Polygon") {
            for (const json& ring : geom.at("coordinates")) b.rings.push_back(read_ring(ring));
        } else if (type == "MultiPolygon") {
            for (const json& poly : geom.at("coordinates"))
                for (const json& ring : poly) b.rings.push_back(read_ring(ring));
        } else {
            throw std::runtime_error(path + ": unsupported geometry type '" + type + "'");
        }
        out.push_back(std::move(b));
    }
    return out;
}

std::string write_boundaries(const std::vector<UrbanBoundary>& bs) {
    json features = json::array();
    for (const UrbanBoundary& b : bs) {
        json rings = json::array();
        for (const auto& ring : b.rings) {
            json r = json::array();
            for (const auto& [lon, lat] : ring) r.push_back(json::array({lon, lat}));
            rings.push_back(std::move(r));
        }
        features.push_back(json{
            {"type", "Feature"},
            {"properties",
             {{"city_id", b.city_id},
              {"country", b.country},
              {"utc_offset_minutes", b.utc_offset_minutes},
              {"pop2000", b.population_2000},
              {"pop2010", b.population_2010}}},
            {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}},
        });
    }
    json root{{"type", "FeatureCollection"}, {"features", features}};
    return root.dump(1) + "\n";
}

double boundary_latitude(const UrbanBoundary& b) {
    if (b.rings.empty() || b.rings[0].size() < 2)
        throw std::runtime_error("boundary for city " + std::to_string(b.city_id) +
                                 " has no usable ring");
    const auto& ring = b.rings[0];
    const std::size_t n = ring.size() - 1; // closing vertex repeats the first
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += ring[i].second;
    return sum / static_cast<double>(n);
}

bool point_in_polygon(double lon, double lat, const UrbanBoundary& b) {
    bool inside = false;
    for (const auto& ring : b.rings) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            const double x1 = ring[i].first, y1 = ring[i].second;
            const double x2 = ring[i + 1].first, y2 = ring[i + 1].second;
            // exact on-edge test: collinear and within the bounding box
            const double cross = (x2 - x1) * (lat - y1) - (y2 - y1) * (lon - x1);
            if (cross == 0.0 && lon >= std::min(x1, x2) && lon <= std::max(x1, x2) &&
                lat >= std::min(y1, y2) && lat <= std::max(y1, y2))
                return true;
            // half-open crossing rule for the ray toward +lon
            if ((y1 > lat) != (y2 > lat)) {
                const double x_at = x1 + (lat - y1) * (x2 - x1) / (y2 - y1);
                if (lon < x_at) inside = !inside;
            }
        }
    }
    return inside;
}

std::optional<int> point_in_city(double lon, double lat,
                                 const std::vector<UrbanBoundary>& boundaries) {
    std::optional<int> best;
    for (const UrbanBoundary& b : boundaries)
        if (point_in_polygon(lon, lat, b))
            if (!best || b.city_id < *best) best = b.city_id;
    return best;
}

namespace {

// cheap spatial prefilter: bounding boxes, checked before the exact test
struct BoundaryBoxes {
    std::vector<std::array<double, 4>> box; // lon_min, lon_max, lat_min, lat_max
    explicit BoundaryBoxes(const std::vector<UrbanBoundary>& bs) {
        box.reserve(bs.size());
        for (const auto& b : bs) {
            std::array<double, 4> bb{1e300, -1e300, 1e300, -1e300};
            for (const auto& ring : b.rings)
                for (const auto& [x, y] : ring) {
                    bb[0] = std::min(bb[0], x);
                    bb[1] = std::max(bb[1], x);
                    bb[2] = std::min(bb[2], y);
                    bb[3] = std::max(bb[3], y);
                }
            box.push_back(bb);
        }
    }
    bool maybe(std::size_t i, double lon, double lat) const {
        const auto& bb = box[i];
        return lon >= bb[0] && lon <= bb[1] && lat >= bb[2] && lat <= bb[3];
    }
};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

} // namespace

std::vector<LocatedRecord> assign_records(const std::vector<ScanRecord>& scans,
                                          const GeoIndex& geo,
                                          const std::vector<UrbanBoundary>& boundaries,
                                          int workers, AssignStats* stats) {
    if (workers < 1) workers = 1;
    BoundaryBoxes boxes(boundaries);
    std::vector<std::vector<LocatedRecord>> parts(workers);
    std::vector<AssignStats> part_stats(workers);

    auto run = [&](int w) {
        const std::size_t n = scans.size();
        const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
        auto& out = parts[w];
        auto& st = part_stats[w];
        for (std::size_t i = lo; i < hi; ++i) {
            const ScanRecord& s = scans[i];
            auto loc = geo.locate(s.ip, s.timestamp);
            if (!loc) {
                ++st.unlocated;
                continue;
            }
            std::optional<int> city;
            for (std::size_t b = 0; b < boundaries.size(); ++b) {
                if (!boxes.maybe(b, loc->lon, loc->lat)) continue;
                if (point_in_polygon(loc->lon, loc->lat, boundaries[b]))
                    if (!city || boundaries[b].city_id < *city) city = boundaries[b].city_id;
            }
            if (!city) {
                ++st.unassigned;
                continue;
            }
            ++st.assigned;
            out.push_back(LocatedRecord{*city, s.timestamp, s.ip, s.status});
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& th : pool) th.join();
    }

    std::vector<LocatedRecord> out;
    AssignStats total;
    for (int w = 0; w < workers; ++w) {
        // chunks are in input order, so concatenation preserves it
        out.insert(out.end(), parts[w].begin(), parts[w].end());
        total.assigned += part_stats[w].assigned;
        total.unlocated += part_stats[w].unlocated;
        total.unassigned += part_stats[w].unassigned;
    }
    if (stats) *stats = total;
    return out;
}

std::vector<SegmentBin> bin_activity(const std::vector<LocatedRecord>& records,
                                     const std::vector<UrbanBoundary>& boundaries, int workers) {
    if (workers < 1) workers = 1;
    std::unordered_map<int, int> offset_by_city;
    for (const auto& b : boundaries) offset_by_city[b.city_id] = b.utc_offset_minutes;

    using Key = std::uint64_t; // city 20 bits | date 30 bits | segment 14 bits
    auto make_key = [](int city, std::int64_t date, int seg) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(city)) << 44) |
               (static_cast<std::uint64_t>(static_cast<std::uint32_t>(date + (1 << 29))) << 14) |
               static_cast<std::uint64_t>(seg);
    };

    std::vector<std::unordered_map<Key, std::pair<std::int64_t, std::int64_t>>> maps(workers);
    auto run = [&](int w) {
        const std::size_t n = records.size();
        const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
        auto& acc = maps[w];
        for (std::size_t i = lo; i < hi; ++i) {
            const LocatedRecord& r = records[i];
            auto it = offset_by_city.find(r.city_id);
            if (it == offset_by_city.end())
                throw std::runtime_error("record references unknown city " +
                                         std::to_string(r.city_id));
            const std::int64_t local = r.timestamp + static_cast<std::int64_t>(it->second) * 60;
            const std::int64_t date = floor_div(local, 86400);
            const int seg = static_cast<int>((local - date * 86400) / 900);
            auto& cell = acc[make_key(r.city_id, date, seg)];
            if (r.status == ProbeStatus::online)
                ++cell.first;
            else
                ++cell.second;
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& th : pool) th.join();
    }

    // merge by addition (associative, order-free), then canonical sort
    std::unordered_map<Key, std::pair<std::int64_t, std::int64_t>> merged;
    for (auto& m : maps)
        for (auto& [k, v] : m) {
            auto& cell = merged[k];
            cell.first += v.first;
            cell.second += v.second;
        }
    std::vector<SegmentBin> out;
    out.reserve(merged.size());
    for (auto& [k, v] : merged) {
        SegmentBin b;
        b.city_id = static_cast<int>(k >> 44);
        b.local_date = static_cast<std::int64_t>((k >> 14) & ((1ULL << 30) - 1)) - (1 << 29);
        b.segment = static_cast<int>(k & ((1ULL << 14) - 1));
        b.n_on = v.first;
        b.n_off = v.second;
        out.push_back(b);
    }
    std::sort(out.begin(), out.end(), [](const SegmentBin& a, const SegmentBin& b) {
        if (a.city_id != b.city_id) return a.city_id < b.city_id;
        if (a.local_date != b.local_date) return a.local_date < b.local_date;
        return a.segment < b.segment;
    });
    return out;
}

double fraction_online(const SegmentBin& bin) {
    const std::int64_t total = bin.n_on + bin.n_off;
    if (total <= 0)
        throw std::domain_error("fraction_online: empty bin (city " +
                                std::to_string(bin.city_id) + ")");
    return static_cast<double>(bin.n_on) / static_cast<double>(total);
}

std::vector<MonthlyCityCount> monthly_unique_ips(const std::vector<LocatedRecord>& records,
                                                 const std::vector<UrbanBoundary>& boundaries,
                                                 int min_days) {
    std::unordered_map<int, int> offset_by_city;
    for (const auto& b : boundaries) offset_by_city[b.city_id] = b.utc_offset_minutes;

    // (city, month_index, ip) triples; month and date from city-local time
    std::vector<std::tuple<int, int, std::uint32_t>> triples;
    triples.reserve(records.size());
    std::unordered_map<int, std::set<std::int64_t>> days_by_month;
    for (const LocatedRecord& r : records) {
        auto it = offset_by_city.find(r.city_id);
        if (it == offset_by_city.end())
            throw std::runtime_error("record references unknown city " +
                                     std::to_string(r.city_id));
        const std::int64_t local = r.timestamp + static_cast<std::int64_t>(it->second) * 60;
        const std::int64_t date = floor_div(local, 86400);
        const CivilDate cd = civil_from_days(date);
        const int mi = month_index(cd.year, cd.month);
        triples.emplace_back(r.city_id, mi, r.ip.value);
        days_by_month[mi].insert(date);
    }
    std::sort(triples.begin(), triples.end());
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());

    std::vector<MonthlyCityCount> out;
    for (std::size_t i = 0; i < triples.size();) {
        const int city = std::get<0>(triples[i]);
        const int mi = std::get<1>(triples[i]);
        std::size_t j = i;
        while (j < triples.size() && std::get<0>(triples[j]) == city &&
               std::get<1>(triples[j]) == mi)
            ++j;
        if (static_cast<int>(days_by_month[mi].size()) >= min_days) {
            const CivilDate cd = month_index_to_civil(mi);
            out.push_back(MonthlyCityCount{city, cd.year, cd.month,
                                           static_cast<std::int64_t>(j - i), 0.0});
        }
        i = j;
    }
    std::sort(out.begin(), out.end(), [](const MonthlyCityCount& a, const MonthlyCityCount& b) {
        if (a.city_id != b.city_id) return a.city_id < b.city_id;
        return a.index() < b.index();
    });
    return out;
}

double interpolate_population(const UrbanBoundary& b, int year) {
    if (b.population_2000 <= 0.0 || b.population_2010 <= 0.0)
        throw std::domain_error("population anchors missing for city " +
                                std::to_string(b.city_id));
    return b.population_2000 + (b.population_2010 - b.population_2000) * (year - 2000) / 10.0;
}

MissoniResult missoni_correct(const std::vector<MonthlyCityCount>& counts, std::int64_t cutoff) {
    std::set<int> month_set;
    std::set<int> city_set;
    for (const auto& c : counts) {
        month_set.insert(c.index());
        city_set.insert(c.city_id);
    }
    if (month_set.size() < 2)
        throw std::domain_error("missoni correction needs at least 2 retained months");

    // keep a city only if it meets the cutoff in every retained month
    std::map<std::pair<int, int>, std::int64_t> by_city_month;
    for (const auto& c : counts) by_city_month[{c.city_id, c.index()}] = c.unique_ips;
    std::set<int> kept;
    std::vector<int> dropped;
    for (int city : city_set) {
        bool ok = true;
        for (int m : month_set) {
            auto it = by_city_month.find({city, m});
            if (it == by_city_month.end() || it->second < cutoff) {
                ok = false;
                break;
            }
        }
        if (ok)
            kept.insert(city);
        else
            dropped.push_back(city);
    }
    if (kept.empty()) throw std::domain_error("missoni correction: every city fails the cutoff");

    MissoniResult res;
    res.dropped_cities = dropped;
    res.months.assign(month_set.begin(), month_set.end());

    std::map<int, double> total;
    for (int m : res.months) total[m] = 0.0;
    for (const auto& c : counts)
        if (kept.count(c.city_id)) total[c.index()] += static_cast<double>(c.unique_ips);

    // two-parameter OLS of totals on month index
    const double n = static_cast<double>(res.months.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int m : res.months) {
        sx += m;
        sy += total[m];
        sxx += static_cast<double>(m) * m;
        sxy += m * total[m];
    }
    const double denom = n * sxx - sx * sx;
    res.trend_slope = (n * sxy - sx * sy) / denom;
    res.trend_intercept = (sy - res.trend_slope * sx) / n;

    std::map<int, double> scale;
    for (int m : res.months) {
        const double trend = res.trend_intercept + res.trend_slope * m;
        if (trend <= 0.0) throw std::domain_error("missoni correction: non-positive trend value");
        scale[m] = trend / total[m];
        res.residuals.push_back(total[m] - trend);
    }
    for (const auto& c : counts) {
        if (!kept.count(c.city_id)) continue;
        MonthlyCityCount out = c;
        out.corrected = static_cast<double>(c.unique_ips) * scale[c.index()];
        res.corrected.push_back(out);
    }
    return res;
}

std::vector<CountrySeries> country_ipc_series(const std::vector<MonthlyCityCount>& corrected,
                                              const std::vector<UrbanBoundary>& boundaries) {
    std::unordered_map<int, const UrbanBoundary*> by_city;
    for (const auto& b : boundaries) by_city[b.city_id] = &b;

    // country -> month -> (sum ipc, cities)
    std::map<std::string, std::map<int, std::pair<double, int>>> acc;
    std::map<std::string, std::set<int>> cities;
    for (const auto& c : corrected) {
        auto it = by_city.find(c.city_id);
        if (it == by_city.end()) continue; // city without boundary metadata
        const UrbanBoundary& b = *it->second;
        double pop;
        try {
            pop = interpolate_population(b, c.year);
        } catch (const std::domain_error&) {
            continue; // missing anchors: city excluded from per-capita series
        }
        auto& cell = acc[b.country][c.index()];
        cell.first += c.corrected / pop;
        cell.second += 1;
        cities[b.country].insert(c.city_id);
    }
    std::vector<CountrySeries> out;
    for (auto& [country, months] : acc) {
        CountrySeries s;
        s.country = country;
        s.n_cities = static_cast<int>(cities[country].size());
        for (auto& [m, cell] : months) {
            s.month_indices.push_back(m);
            s.ipc.push_back(cell.first / cell.second);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string write_bins_csv(const std::vector<SegmentBin>& bins) {
    CsvWriter w({"city_id", "local_date", "segment", "n_on", "n_off"});
    for (const auto& b : bins) {
        w.field(b.city_id)
            .field(format_date(civil_from_days(b.local_date)))
            .field(b.segment)
            .field(b.n_on)
            .field(b.n_off);
        w.end_row();
    }
    return w.str();
}

std::vector<SegmentBin> read_bins_csv(const std::string& path) {
    const auto t = CsvTable::from_file(path);
    const auto c_city = t.column("city_id");
    const auto c_date = t.column("local_date");
    const auto c_seg = t.column("segment");
    const auto c_on = t.column("n_on");
    const auto c_off = t.column("n_off");
    std::vector<SegmentBin> out;
    out.reserve(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i) {
        SegmentBin b;
        b.city_id = static_cast<int>(t.integer(i, c_city));
        b.local_date = days_from_civil(parse_date(t.cell(i, c_date)));
        b.segment = static_cast<int>(t.integer(i, c_seg));
        if (b.segment < 0 || b.segment > 95)
            throw std::runtime_error(path + ": segment outside 0..95");
        b.n_on = t.integer(i, c_on);
        b.n_off = t.integer(i, c_off);
        out.push_back(b);
    }
    return out;
}

std::string write_counts_csv(const std::vector<MonthlyCityCount>& counts) {
    CsvWriter w({"city_id", "year", "month", "unique_ips", "corrected"});
    for (const auto& c : counts) {
        w.field(c.city_id).field(c.year).field(c.month).field(c.unique_ips).field(c.corrected);
        w.end_row();
    }
    return w.str();
}

std::vector<MonthlyCityCount> read_counts_csv(const std::string& path) {
    const auto t = CsvTable::from_file(path);
    const auto c_city = t.column("city_id");
    const auto c_year = t.column("year");
    const auto c_month = t.column("month");
    const auto c_unique = t.column("unique_ips");
    const auto c_corr = t.column("corrected");
    std::vector<MonthlyCityCount> out;
    out.reserve(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i) {
        MonthlyCityCount c;
        c.city_id = static_cast<int>(t.integer(i, c_city));
        c.year = static_cast<int>(t.integer(i, c_year));
        c.month = static_cast<int>(t.integer(i, c_month));
        if (c.month < 1 || c.month > 12) throw std::runtime_error(path + ": month outside 1..12");
        c.unique_ips = t.integer(i, c_unique);
        c.corrected = t.num(i, c_corr);
        out.push_back(c);
    }
    return out;
}

} // namespace netpulse
