#include "netpulse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>

#include "netpulse/csv.hpp"
#include "netpulse/dates.hpp"
#include "netpulse/rng.hpp"

namespace netpulse {

namespace {

// independent RNG streams; entity ids stay below 2^32
enum StreamKind : std::uint64_t {
    kCurve = 1,
    kSeriesNoise = 2,
    kSleepTruth = 3,
    kBins = 4,
    kSurvey = 5,
    kPanelRegion = 6,
    kScan = 7,
    kCountsNoise = 8,
    kPanelCountryYear = 9,
    kPanelSectorYear = 10,
    kPanelCell = 11,
};

Rng stream_rng(const WorldConfig& cfg, StreamKind kind, std::uint64_t a, std::uint64_t b = 0) {
    return Rng(derive_seed(cfg.seed, (static_cast<std::uint64_t>(kind) << 32) | a, b));
}

void validate(const WorldConfig& cfg) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::runtime_error(std::string("world config: ") + what);
    };
    require(cfg.n_countries >= 1, "n_countries must be at least 1");
    require(cfg.cities_per_country >= 1, "cities_per_country must be at least 1");
    require(cfg.months >= 1 && cfg.months <= 84, "months must lie in 1..84");
    require(cfg.pool_size >= 1, "pool_size must be at least 1");
    require(cfg.scan_interval_min > 0, "scan_interval_min must be positive");
    require(cfg.scan_days_per_month >= 1 && cfg.scan_days_per_month <= 28,
            "scan_days_per_month must lie in 1..28");
    require(cfg.mean_k > 0 && cfg.mean_k <= 1, "mean_k must lie in (0, 1]");
    require(cfg.mean_alpha > 0, "mean_alpha must be positive");
    require(cfg.sd_alpha >= 0 && cfg.sd_beta >= 0 && cfg.ipc_noise >= 0 &&
                cfg.trace_noise >= 0 && cfg.survey_sd_min >= 0 && cfg.panel_noise >= 0,
            "noise levels must be nonnegative");
    require(cfg.sleep_start_min >= 0 && cfg.sleep_start_min < 1440 &&
                cfg.sleep_stop_min >= 0 && cfg.sleep_stop_min < 1440,
            "sleep times must lie in [0, 1440)");
    require(cfg.sleep_jitter_min >= 0, "sleep_jitter_min must be nonnegative");
    require(cfg.awake_level > 0 && cfg.awake_level <= 1, "awake_level must lie in (0, 1]");
    require(cfg.dip_depth > 0 && cfg.dip_depth < 1, "dip_depth must lie in (0, 1)");
    require(cfg.edge_width_min > 0, "edge_width_min must be positive");
    require(cfg.bin_base_online >= 4, "bin_base_online must be at least 4");
    require(cfg.days_per_year >= 1 && cfg.days_per_year <= 365,
            "days_per_year must lie in 1..365");
    require(cfg.respondents_per_city_year >= 0, "respondents_per_city_year must be nonnegative");
    require(cfg.panel_years >= 1 && cfg.panel_years <= 20, "panel_years must lie in 1..20");
}

int total_cities(const WorldConfig& cfg) { return cfg.n_countries * cfg.cities_per_country; }

int bin_years(const WorldConfig& cfg) { return (cfg.months + 11) / 12; }

double positive_mod(double v, double m) {
    double r = std::fmod(v, m);
    return r < 0 ? r + m : r;
}

std::vector<LogisticParams> planted_curves(const WorldConfig& cfg) {
    std::vector<LogisticParams> curves(static_cast<std::size_t>(cfg.n_countries));
    for (int c = 0; c < cfg.n_countries; ++c) {
        Rng rng = stream_rng(cfg, kCurve, static_cast<std::uint64_t>(c));
        LogisticParams p;
        p.K = cfg.mean_k;
        p.alpha = std::max(cfg.mean_alpha + cfg.sd_alpha * rng.normal(), 0.2 * cfg.mean_alpha);
        p.beta = cfg.mean_beta + cfg.sd_beta * rng.normal();
        curves[static_cast<std::size_t>(c)] = p;
    }
    return curves;
}

SleepTruth planted_sleep(const WorldConfig& cfg, int city_id, int year) {
    Rng rng = stream_rng(cfg, kSleepTruth, static_cast<std::uint64_t>(city_id),
                         static_cast<std::uint64_t>(year));
    SleepTruth t;
    t.city_id = city_id;
    t.year = year;
    t.start_min =
        positive_mod(cfg.sleep_start_min + cfg.sleep_jitter_min * (2.0 * rng.uniform() - 1.0),
                     1440.0);
    t.stop_min =
        positive_mod(cfg.sleep_stop_min + cfg.sleep_jitter_min * (2.0 * rng.uniform() - 1.0),
                     1440.0);
    return t;
}

const std::vector<std::string>& sector_names() {
    static const std::vector<std::string> names = {
        "industry_energy",        "info_comm",      "other_services", "prof_admin_support",
        "public_admin_edu_health", "real_estate",    "trade_transport_hosp"};
    return names;
}

} // namespace

std::string country_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "C%02d", index + 1);
    return buf;
}

int country_of_city(const WorldConfig& cfg, int city_id) {
    return (city_id - 1) / cfg.cities_per_country;
}

std::vector<UrbanBoundary> layout_cities(const WorldConfig& cfg) {
    validate(cfg);
    const int n = total_cities(cfg);
    constexpr int kCols = 170, kRows = 80;
    if (n > kCols * kRows)
        throw std::runtime_error("world config: city layout overflows the coordinate grid "
                                 "(unit squares would overlap)");
    std::vector<UrbanBoundary> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double lon0 = -170.0 + 2.0 * (i % kCols);
        const double lat0 = -80.0 + 2.0 * (i / kCols);
        UrbanBoundary b;
        b.city_id = i + 1;
        b.country = country_name(country_of_city(cfg, b.city_id));
        b.utc_offset_minutes = static_cast<int>(std::llround((lon0 + 0.5) / 15.0)) * 60;
        b.population_2000 = 1e6 * (1.0 + 0.25 * (i % 7));
        b.population_2010 = b.population_2000 * (1.05 + 0.01 * (i % 3));
        b.rings = {{{lon0, lat0}, {lon0 + 1, lat0}, {lon0 + 1, lat0 + 1}, {lon0, lat0 + 1},
                    {lon0, lat0}}};
        out.push_back(std::move(b));
    }
    return out;
}

double diurnal_level(double minute, double start_min, double stop_min, double awake, double dip,
                     double edge_width) {
    auto signed_circular = [](double d) {
        d = std::fmod(d, 1440.0);
        if (d > 720.0) d -= 1440.0;
        if (d < -720.0) d += 1440.0;
        return d;
    };
    auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    const double a = signed_circular(minute - start_min);
    const double b = signed_circular(minute - stop_min);
    const double asleep = sigmoid(a / edge_width) * sigmoid(-b / edge_width);
    return awake * (1.0 - dip * asleep);
}

std::vector<CountryMonthlySeries> gen_series(const WorldConfig& cfg, GroundTruth* truth) {
    validate(cfg);
    const auto curves = planted_curves(cfg);
    std::vector<CountryMonthlySeries> out;
    out.reserve(curves.size());
    for (int c = 0; c < cfg.n_countries; ++c) {
        Rng rng = stream_rng(cfg, kSeriesNoise, static_cast<std::uint64_t>(c));
        CountryMonthlySeries s;
        s.country = country_name(c);
        for (int m = 0; m < cfg.months; ++m) {
            const double clean = logistic(m, curves[static_cast<std::size_t>(c)]);
            s.t.push_back(m);
            s.y.push_back(std::max(clean * (1.0 + cfg.ipc_noise * rng.normal()), 1e-9));
        }
        out.push_back(std::move(s));
    }
    if (truth) {
        truth->countries.clear();
        for (int c = 0; c < cfg.n_countries; ++c) truth->countries.push_back(country_name(c));
        truth->curves = curves;
    }
    return out;
}

std::vector<SegmentBin> gen_bins(const WorldConfig& cfg, std::vector<SleepTruth>* truth) {
    validate(cfg);
    std::vector<SegmentBin> bins;
    if (truth) truth->clear();
    const int years = bin_years(cfg);
    const std::int64_t n = cfg.bin_base_online;
    for (int city = 1; city <= total_cities(cfg); ++city) {
        for (int yi = 0; yi < years; ++yi) {
            const int year = 2006 + yi;
            const SleepTruth st = planted_sleep(cfg, city, year);
            if (truth) truth->push_back(st);
            const std::int64_t jan1 = days_from_civil({year, 1, 1});
            for (int d = 0; d < cfg.days_per_year; ++d) {
                Rng rng = stream_rng(cfg, kBins, static_cast<std::uint64_t>(city),
                                     static_cast<std::uint64_t>(jan1 + d));
                for (int s = 0; s < 96; ++s) {
                    const double mid = 15.0 * s + 7.5;
                    double p = diurnal_level(mid, st.start_min, st.stop_min, cfg.awake_level,
                                             cfg.dip_depth, cfg.edge_width_min);
                    p = std::clamp(p * (1.0 + cfg.trace_noise * rng.normal()), 0.01, 0.99);
                    const double mu = static_cast<double>(n) * p;
                    const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
                    const std::int64_t on = std::clamp<std::int64_t>(
                        std::llround(mu + sd * rng.normal()), 1, n - 1);
                    bins.push_back({city, jan1 + d, s, on, n - on});
                }
            }
        }
    }
    return bins;
}

std::vector<SurveyEntry> gen_survey(const WorldConfig& cfg,
                                    const std::vector<SleepTruth>& truth) {
    validate(cfg);
    std::vector<SurveyEntry> out;
    for (const auto& st : truth) {
        Rng rng = stream_rng(cfg, kSurvey, static_cast<std::uint64_t>(st.city_id),
                             static_cast<std::uint64_t>(st.year));
        for (int r = 0; r < cfg.respondents_per_city_year; ++r) {
            SurveyEntry e;
            e.city_id = st.city_id;
            e.year = st.year;
            e.respondent_id = "r" + std::to_string(r + 1);
            e.weight = rng.uniform(0.5, 1.5);
            const double start = positive_mod(st.start_min + cfg.survey_sd_min * rng.normal(),
                                              1440.0);
            const double stop = positive_mod(st.stop_min + cfg.survey_sd_min * rng.normal(),
                                             1440.0);
            e.entry_time = static_cast<int>(std::llround(start)) % 1440;
            e.entry_kind = EntryKind::Start;
            out.push_back(e);
            e.entry_time = static_cast<int>(std::llround(stop)) % 1440;
            e.entry_kind = EntryKind::Stop;
            out.push_back(e);
        }
    }
    return out;
}

std::vector<MonthlyCityCount> gen_counts(const WorldConfig& cfg,
                                         const std::vector<UrbanBoundary>& boundaries,
                                         const GroundTruth& truth) {
    validate(cfg);
    std::vector<MonthlyCityCount> out;
    for (const auto& b : boundaries) {
        const auto& curve =
            truth.curves[static_cast<std::size_t>(country_of_city(cfg, b.city_id))];
        Rng rng = stream_rng(cfg, kCountsNoise, static_cast<std::uint64_t>(b.city_id));
        for (int m = 0; m < cfg.months; ++m) {
            const CivilDate cd = month_index_to_civil(m);
            const double ipc =
                std::max(logistic(m, curve) * (1.0 + cfg.ipc_noise * rng.normal()), 1e-9);
            MonthlyCityCount c;
            c.city_id = b.city_id;
            c.year = cd.year;
            c.month = cd.month;
            c.unique_ips = std::max<std::int64_t>(
                1, std::llround(ipc * interpolate_population(b, cd.year)));
            c.corrected = static_cast<double>(c.unique_ips);
            out.push_back(c);
        }
    }
    return out;
}

std::vector<PanelObservation> gen_panel(const WorldConfig& cfg, GroundTruth* truth) {
    validate(cfg);
    const auto curves = planted_curves(cfg);
    const auto& sectors = sector_names();

    std::vector<PanelObservation> out;
    const int n = total_cities(cfg);
    std::vector<double> mu(static_cast<std::size_t>(n)), level(static_cast<std::size_t>(n)),
        trend(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> mu_sector(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng = stream_rng(cfg, kPanelRegion, static_cast<std::uint64_t>(i + 1));
        mu[static_cast<std::size_t>(i)] = 0.5 * rng.normal();
        level[static_cast<std::size_t>(i)] = 0.4 * rng.normal();
        trend[static_cast<std::size_t>(i)] = 0.02 * rng.normal();
        for (std::size_t s = 0; s < sectors.size(); ++s)
            mu_sector[static_cast<std::size_t>(i)].push_back(0.4 * rng.normal());
    }

    for (int i = 0; i < n; ++i) {
        const int city_id = i + 1;
        const int c = country_of_city(cfg, city_id);
        for (int y = 0; y < cfg.panel_years; ++y) {
            const int year = 2006 + y;
            Rng cy = stream_rng(cfg, kPanelCountryYear, static_cast<std::uint64_t>(c),
                                static_cast<std::uint64_t>(year));
            const double theta = 0.3 * cy.normal();
            Rng cell = stream_rng(cfg, kPanelCell, static_cast<std::uint64_t>(city_id),
                                  static_cast<std::uint64_t>(year));
            const double month_mid = 12.0 * y + 6.0;
            const double x = logistic(month_mid, curves[static_cast<std::size_t>(c)]) *
                             std::exp(level[static_cast<std::size_t>(i)] + 0.2 * cell.normal());

            PanelObservation o;
            o.region_id = "R" + std::to_string(city_id);
            o.country = country_name(c);
            o.year = year;
            o.ip_pc = x;
            o.gdp_pc = std::exp(10.0 + mu[static_cast<std::size_t>(i)] +
                                cfg.beta_gdp * std::log(x) + theta +
                                trend[static_cast<std::size_t>(i)] * (year - 2009) +
                                cfg.panel_noise * cell.normal());
            for (std::size_t s = 0; s < sectors.size(); ++s) {
                Rng sy = stream_rng(cfg, kPanelSectorYear, s, static_cast<std::uint64_t>(year));
                o.gva[sectors[s]] = std::exp(11.0 + mu_sector[static_cast<std::size_t>(i)][s] +
                                             cfg.gamma_sector * std::log(x) + 0.2 * sy.normal() +
                                             cfg.panel_noise * cell.normal());
            }
            out.push_back(std::move(o));
        }
    }
    if (truth) {
        truth->beta_gdp = cfg.beta_gdp;
        truth->gamma.clear();
        for (const auto& s : sectors) truth->gamma[s] = cfg.gamma_sector;
    }
    return out;
}

IpAddress city_pool_base(int city_id) {
    return IpAddress{0x0A000000u + static_cast<std::uint32_t>(city_id) * 0x10000u};
}

std::vector<GeoRangeRecord> gen_geo_ranges(const WorldConfig& cfg,
                                           const std::vector<UrbanBoundary>& boundaries) {
    validate(cfg);
    std::vector<GeoRangeRecord> out;
    out.reserve(boundaries.size());
    for (const auto& b : boundaries) {
        GeoRangeRecord r;
        r.ip_lo = city_pool_base(b.city_id);
        r.ip_hi = IpAddress{r.ip_lo.value + static_cast<std::uint32_t>(cfg.pool_size) - 1};
        r.lon = b.rings[0][0].first + 0.5;
        r.lat = b.rings[0][0].second + 0.5;
        r.revision_date = days_from_civil({2005, 12, 1}) * 86400;
        out.push_back(r);
    }
    return out;
}

std::vector<ScanRecord> gen_scans(const WorldConfig& cfg,
                                  const std::vector<UrbanBoundary>& boundaries,
                                  const GroundTruth& truth) {
    validate(cfg);
    std::map<std::pair<int, int>, const SleepTruth*> schedule;
    for (const auto& st : truth.sleep) schedule[{st.city_id, st.year}] = &st;

    std::vector<ScanRecord> out;
    const int day_step = 28 / cfg.scan_days_per_month;
    for (const auto& b : boundaries) {
        const IpAddress base = city_pool_base(b.city_id);
        const LogisticParams curve = truth.curves.at(country_of_city(cfg, b.city_id));
        for (int m = 0; m < cfg.months; ++m) {
            // assigned prefix of the pool; reaches pool_size at saturation
            const int assigned = static_cast<int>(std::clamp<std::int64_t>(
                std::llround(cfg.pool_size * logistic(m, curve) / curve.K), 0, cfg.pool_size));
            Rng rng = stream_rng(cfg, kScan, static_cast<std::uint64_t>(b.city_id),
                                 static_cast<std::uint64_t>(m));
            CivilDate cd = month_index_to_civil(m);
            auto it = schedule.find({b.city_id, cd.year});
            if (it == schedule.end())
                throw std::runtime_error("scan generation: no planted schedule for year " +
                                         std::to_string(cd.year));
            const SleepTruth& st = *it->second;
            for (int k = 0; k < cfg.scan_days_per_month; ++k) {
                cd.day = 1 + k * day_step;
                const std::int64_t day_start = days_from_civil(cd) * 86400;
                for (double lm = 0.0; lm < 1440.0; lm += cfg.scan_interval_min) {
                    double p = diurnal_level(lm, st.start_min, st.stop_min, cfg.awake_level,
                                             cfg.dip_depth, cfg.edge_width_min);
                    p = std::clamp(p * (1.0 + cfg.trace_noise * rng.normal()), 0.01, 0.99);
                    const std::int64_t ts =
                        day_start + std::llround(lm * 60.0) - b.utc_offset_minutes * 60;
                    for (int j = 0; j < assigned; ++j) {
                        ScanRecord r;
                        r.timestamp = ts;
                        r.ip = IpAddress{base.value + static_cast<std::uint32_t>(j)};
                        r.status = rng.uniform() < p ? ProbeStatus::online : ProbeStatus::offline;
                        out.push_back(r);
                    }
                }
            }
        }
    }
    return out;
}

WorldConfig read_world_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    WorldConfig cfg;
    auto num = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    num("seed", cfg.seed);
    num("n_countries", cfg.n_countries);
    num("cities_per_country", cfg.cities_per_country);
    num("months", cfg.months);
    num("pool_size", cfg.pool_size);
    num("scan_interval_min", cfg.scan_interval_min);
    num("scan_days_per_month", cfg.scan_days_per_month);
    num("mean_k", cfg.mean_k);
    num("mean_alpha", cfg.mean_alpha);
    num("mean_beta", cfg.mean_beta);
    num("sd_alpha", cfg.sd_alpha);
    num("sd_beta", cfg.sd_beta);
    num("ipc_noise", cfg.ipc_noise);
    num("sleep_start_min", cfg.sleep_start_min);
    num("sleep_stop_min", cfg.sleep_stop_min);
    num("sleep_jitter_min", cfg.sleep_jitter_min);
    num("awake_level", cfg.awake_level);
    num("dip_depth", cfg.dip_depth);
    num("edge_width_min", cfg.edge_width_min);
    num("trace_noise", cfg.trace_noise);
    num("bin_base_online", cfg.bin_base_online);
    num("days_per_year", cfg.days_per_year);
    num("respondents_per_city_year", cfg.respondents_per_city_year);
    num("survey_sd_min", cfg.survey_sd_min);
    num("panel_years", cfg.panel_years);
    num("beta_gdp", cfg.beta_gdp);
    num("gamma_sector", cfg.gamma_sector);
    num("panel_noise", cfg.panel_noise);

    static const char* known[] = {
        "seed",          "n_countries",       "cities_per_country",
        "months",        "pool_size",         "scan_interval_min",
        "scan_days_per_month", "mean_k",      "mean_alpha",
        "mean_beta",     "sd_alpha",          "sd_beta",
        "ipc_noise",     "sleep_start_min",   "sleep_stop_min",
        "sleep_jitter_min", "awake_level",    "dip_depth",
        "edge_width_min", "trace_noise",      "bin_base_online",
        "days_per_year", "respondents_per_city_year", "survey_sd_min",
        "panel_years",   "beta_gdp",          "gamma_sector",
        "panel_noise"};
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw std::runtime_error(path + ": unknown config key '" + key + "'");
    }
    validate(cfg);
    return cfg;
}

GroundTruth gen_world(const WorldConfig& cfg, const std::string& out_dir, WorldFiles* files) {
    validate(cfg);
    std::filesystem::create_directories(out_dir);
    auto path = [&](const char* name) { return out_dir + "/" + name; };

    const auto boundaries = layout_cities(cfg);
    GroundTruth truth;
    truth.countries.clear();
    for (int c = 0; c < cfg.n_countries; ++c) truth.countries.push_back(country_name(c));
    truth.curves = planted_curves(cfg);

    const auto bins = gen_bins(cfg, &truth.sleep);
    const auto survey = gen_survey(cfg, truth.sleep);
    const auto counts = gen_counts(cfg, boundaries, truth);
    const auto panel = gen_panel(cfg, &truth);
    const auto scans = gen_scans(cfg, boundaries, truth);
    const auto geo = gen_geo_ranges(cfg, boundaries);

    write_file(path("boundaries.json"), write_boundaries(boundaries));
    write_file(path("bins.csv"), write_bins_csv(bins));
    write_file(path("counts.csv"), write_counts_csv(counts));

    {
        CsvWriter w({"timestamp_utc", "ip", "status"});
        for (const auto& r : scans) {
            w.field(r.timestamp)
                .field(format_ipv4(r.ip))
                .field(r.status == ProbeStatus::online ? 1 : 0);
            w.end_row();
        }
        w.to_file(path("scans.csv"));
    }
    {
        CsvWriter w({"ip_lo", "ip_hi", "lon", "lat", "revision_date"});
        for (const auto& r : geo) {
            w.field(format_ipv4(r.ip_lo))
                .field(format_ipv4(r.ip_hi))
                .field(r.lon)
                .field(r.lat)
                .field(format_date(civil_from_days(r.revision_date / 86400)));
            w.end_row();
        }
        w.to_file(path("geo.csv"));
    }
    {
        CsvWriter w({"city_id", "year", "respondent_id", "weight", "entry_time", "entry_kind"});
        for (const auto& e : survey) {
            w.field(e.city_id)
                .field(e.year)
                .field(e.respondent_id)
                .field(e.weight)
                .field(e.entry_time)
                .field(e.entry_kind == EntryKind::Start ? "start" : "stop");
            w.end_row();
        }
        w.to_file(path("survey.csv"));
    }
    {
        std::vector<std::string> header = {"region_id", "country", "year", "gdp_pc", "ip_pc"};
        for (const auto& s : sector_names()) header.push_back("gva_" + s);
        CsvWriter w(header);
        for (const auto& o : panel) {
            w.field(o.region_id).field(o.country).field(o.year).field(o.gdp_pc).field(o.ip_pc);
            for (const auto& s : sector_names()) w.field(o.gva.at(s));
            w.end_row();
        }
        w.to_file(path("panel.csv"));
    }
    {
        CsvWriter w({"country", "K", "alpha", "beta"});
        for (std::size_t c = 0; c < truth.countries.size(); ++c) {
            w.field(truth.countries[c])
                .field(truth.curves[c].K)
                .field(truth.curves[c].alpha)
                .field(truth.curves[c].beta);
            w.end_row();
        }
        w.to_file(path("truth_curves.csv"));
    }
    {
        CsvWriter w({"city_id", "year", "start_min", "stop_min"});
        for (const auto& s : truth.sleep) {
            w.field(s.city_id).field(s.year).field(s.start_min).field(s.stop_min);
            w.end_row();
        }
        w.to_file(path("truth_sleep.csv"));
    }
    {
        CsvWriter w({"coefficient", "value"});
        w.field("beta_gdp").field(truth.beta_gdp);
        w.end_row();
        for (const auto& [sector, gamma] : truth.gamma) {
            w.field("gamma_" + sector).field(gamma);
            w.end_row();
        }
        w.to_file(path("truth_panel.csv"));
    }

    if (files) {
        files->boundaries = path("boundaries.json");
        files->scans = path("scans.csv");
        files->geo = path("geo.csv");
        files->bins = path("bins.csv");
        files->counts = path("counts.csv");
        files->survey = path("survey.csv");
        files->panel = path("panel.csv");
        files->truth_curves = path("truth_curves.csv");
        files->truth_sleep = path("truth_sleep.csv");
        files->truth_panel = path("truth_panel.csv");
    }
    return truth;
}

} // namespace netpulse
