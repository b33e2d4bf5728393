#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace netpulse {

struct PanelObservation {
    std::string region_id;
    std::string country;
    int year = 0;
    double gdp_pc = 0.0;
    double ip_pc = 0.0;
    std::map<std::string, double> gva; // sector -> value added per worker
};

// columns: region_id,country,year,gdp_pc,ip_pc,gva_<sector>...
// empty or NA sector cells mean the sector is unobserved for that row
std::vector<PanelObservation> read_panel_csv(const std::string& path);
std::vector<std::string> panel_sectors(const std::vector<PanelObservation>& panel);

struct RegressionSpec {
    bool year_effects = false;         // lambda_t
    bool region_effects = false;       // mu_i
    bool country_year_effects = false; // theta_ct
    bool region_trends = false;        // tau_i * t (implies region intercepts)
    int lag = 0;                       // regressor from year - lag
};

struct FitResult {
    double beta = 0.0;
    double robust_se = 0.0; // HC1
    double r_squared = 0.0; // on the raw regressand, absorbed effects included
    std::size_t n_obs = 0;
    std::size_t n_regions = 0;
    std::size_t n_dropped = 0; // rows lost to nonpositive values or missing lags
    std::size_t model_dof = 0; // regressor + absorbed effect parameters
};

// ln(gdp_pc) on ln(ip_pc) after absorbing the requested effects by
// alternating within-projections; HC1 standard errors.
FitResult fit_fe(const std::vector<PanelObservation>& panel, const RegressionSpec& spec);

// Reference estimator: the same model via explicit dummy columns and a
// rank-revealing QR. Slow, kept for agreement checks on small instances.
FitResult fit_fe_dummies(const std::vector<PanelObservation>& panel,
                         const RegressionSpec& spec);

// ln(gva per worker) for one sector on ln(ip_pc); region and year effects
FitResult fit_sectoral(const std::vector<PanelObservation>& panel, const std::string& sector,
                       std::size_t min_rows = 10);

enum class FilterKind {
    None,
    TrimGdp, // drop below the 5th and above the 95th percentile of gdp_pc
    BelowMedianGdp,
    AboveMedianGdp,
    TrimIp,
    ExcludeCountries,
    YearMax2008,
    YearAfter2008,
};

struct SampleFilter {
    FilterKind kind = FilterKind::None;
    std::vector<std::string> countries; // ExcludeCountries only
};

SampleFilter parse_filter(const std::string& text); // "none", "trim-gdp", ...

struct FilterReport {
    std::size_t n_before = 0, n_after = 0;
};

std::vector<PanelObservation> apply_sample_filter(const std::vector<PanelObservation>& panel,
                                                  const SampleFilter& filter,
                                                  FilterReport* report = nullptr);

} // namespace netpulse
