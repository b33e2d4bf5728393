#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "netpulse/aggregate.hpp"
#include "netpulse/chrono.hpp"
#include "netpulse/diffusion.hpp"
#include "netpulse/econo.hpp"
#include "netpulse/geo.hpp"

namespace netpulse {

// Everything the generator plants is configurable; identical config + seed
// give bit-identical worlds.
struct WorldConfig {
    std::uint64_t seed = 1;
    int n_countries = 2;
    int cities_per_country = 2;
    int months = 24; // from January 2006; at most 84 (the study window)

    // probe-level scan emission (desk scale)
    int pool_size = 24;          // addresses per city
    double scan_interval_min = 11.0;
    int scan_days_per_month = 1;

    // planted diffusion curves: K is shared, (alpha, midpoint) vary by country
    double mean_k = 0.32, mean_alpha = 0.047, mean_beta = 36.0;
    double sd_alpha = 0.008, sd_beta = 6.0;
    double ipc_noise = 0.01; // relative sd on monthly IP-per-capita

    // planted sleep schedule, minutes of local day
    double sleep_start_min = 1350.0; // 22:30
    double sleep_stop_min = 390.0;   // 06:30
    double sleep_jitter_min = 45.0;  // city-year offsets, uniform in +-jitter
    double awake_level = 0.8;        // daytime fraction online
    double dip_depth = 0.85;         // relative drop while asleep
    double edge_width_min = 15.0;    // sigmoid width of the two transitions
    double trace_noise = 0.05;       // relative sd on per-segment probabilities
    int bin_base_online = 2000;      // addresses behind every bin draw
    int days_per_year = 45;          // consecutive days with full coverage

    // survey labels
    int respondents_per_city_year = 30;
    double survey_sd_min = 20.0;

    // planted panel
    int panel_years = 7; // 2006..2012
    double beta_gdp = 0.08;
    double gamma_sector = -0.03;
    double panel_noise = 0.0;
};

WorldConfig read_world_config(const std::string& path); // JSON, all keys optional

struct SleepTruth {
    int city_id = 0;
    int year = 0;
    double start_min = 0.0, stop_min = 0.0;
};

struct GroundTruth {
    std::vector<std::string> countries;
    std::vector<LogisticParams> curves; // parallel to countries
    std::vector<SleepTruth> sleep;
    double beta_gdp = 0.0;
    std::map<std::string, double> gamma; // sector -> planted coefficient
};

// disjoint unit squares on a lon/lat grid; throws when the grid overflows
std::vector<UrbanBoundary> layout_cities(const WorldConfig& cfg);
std::string country_name(int index);     // "C01", "C02", ...
int country_of_city(const WorldConfig& cfg, int city_id);

// smooth double-sigmoid diurnal curve; minimum inside the sleep interval
double diurnal_level(double minute, double start_min, double stop_min, double awake,
                     double dip, double edge_width);

// country-level monthly IP-per-capita with planted logistic ground truth
std::vector<CountryMonthlySeries> gen_series(const WorldConfig& cfg, GroundTruth* truth);

// per-city segment bins with planted sleep schedules; all days qualify
std::vector<SegmentBin> gen_bins(const WorldConfig& cfg, std::vector<SleepTruth>* truth);

std::vector<SurveyEntry> gen_survey(const WorldConfig& cfg,
                                    const std::vector<SleepTruth>& truth);

std::vector<MonthlyCityCount> gen_counts(const WorldConfig& cfg,
                                         const std::vector<UrbanBoundary>& boundaries,
                                         const GroundTruth& truth);

std::vector<PanelObservation> gen_panel(const WorldConfig& cfg, GroundTruth* truth);

// Probes a prefix of each city pool that grows along the planted country
// curve, so monthly unique-IP counting over the stream reproduces the
// logistic in pool units (pool_size at saturation).
std::vector<ScanRecord> gen_scans(const WorldConfig& cfg,
                                  const std::vector<UrbanBoundary>& boundaries,
                                  const GroundTruth& truth);
std::vector<GeoRangeRecord> gen_geo_ranges(const WorldConfig& cfg,
                                           const std::vector<UrbanBoundary>& boundaries);

IpAddress city_pool_base(int city_id); // city's first probe address

struct WorldFiles {
    std::string boundaries, scans, geo, bins, counts, survey, panel;
    std::string truth_curves, truth_sleep, truth_panel;
};

// writes every artifact the downstream commands consume plus the truth CSVs
GroundTruth gen_world(const WorldConfig& cfg, const std::string& out_dir,
                      WorldFiles* files = nullptr);

} // namespace netpulse
