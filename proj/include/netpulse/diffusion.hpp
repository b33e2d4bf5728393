#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace netpulse {

struct LogisticParams {
    double K = 0.0;     // asymptotic limit
    double alpha = 0.0; // per-month growth rate
    double beta = 0.0;  // month index of the midpoint

    bool valid() const { return K > 0.0 && alpha > 0.0; }
};

double logistic(double t, const LogisticParams& p);

struct SaturationWindow {
    double t_1pct, t_99pct, duration_months;
    double duration_years() const { return duration_months / 12.0; }
};

// t at fraction q of K solves q = 1/(1+e^{-a(t-b)}), so the 1%..99% window is
// beta -+ ln(99)/alpha and its width does not depend on K or beta.
SaturationWindow saturation_window(const LogisticParams& p);

struct CountryMonthlySeries {
    std::string country;
    std::vector<double> t; // month indices, 0 = January 2006
    std::vector<double> y; // IP per capita
};

struct SaemConfig {
    int iterations = 500;
    int chains = 5;
    double burn_fraction = 0.5; // step size 1 up to this fraction, then 1/(k-B)
    int min_months = 10;
    int polish_iterations = 1000; // deterministic conditional-update refinement
    std::uint64_t seed = 1;
};

struct CountryEffect {
    std::string country;
    double delta_alpha; // effective alpha minus mean-field alpha
    double delta_beta;
    double alpha, beta; // effective per-country values
};

struct MixedEffectsFit {
    LogisticParams mean_field;
    std::vector<CountryEffect> per_country;
    double rmse = 0.0;
    double sigma = 0.0;              // residual sd
    double omega_g = 0.0, omega_b = 0.0; // random-effect sds on (1/alpha, beta)
    int iterations = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> dropped; // degenerate input series
};

// Nonlinear mixed-effects fit of the logistic model: K is a global fixed
// effect, each country carries Gaussian random offsets on (1/alpha, beta).
// Stochastic EM: random-walk Metropolis simulation step per country chain,
// Robbins-Monro smoothing of sufficient statistics, closed-form M step,
// then a deterministic conditional-update polish. Bit-reproducible per seed.
MixedEffectsFit fit_saem(const std::vector<CountryMonthlySeries>& series, const SaemConfig& cfg);

enum class Category { Saturated, High, Medium, Low };
std::string category_name(Category c);

// thresholds 0.32 / 0.16 / 0.08 by successive halving; boundaries inclusive
// downward (0.32 is Saturated)
Category categorize(double ipc_2012);

struct SaturationSummary {
    std::string country;
    int n_cities = 0;
    int rank_2006 = 0, rank_2012 = 0, rank_change = 0;
    Category category = Category::Low;
    double ipc_2012 = 0.0;
    double asymptotic_limit = 0.0; // mean-field K plus the country's deviation
                                   // from the mean-field curve at the window edge
    double growth_rate = 0.0;
    int year_1pct = 0, year_99pct = 0;
};

// Ranks by observed mean IP per capita in 2006 and 2012 (dense ranking, ties
// by country code); change = rank_2006 - rank_2012 so climbing is positive.
std::vector<SaturationSummary> rank_countries(
    const MixedEffectsFit& fit, const std::vector<CountryMonthlySeries>& series,
    const std::vector<std::pair<std::string, int>>& cities_per_country);

std::vector<CountryMonthlySeries> read_series_csv(const std::string& path);
std::string write_fit_csv(const MixedEffectsFit& fit);
std::string write_ranking_csv(const std::vector<SaturationSummary>& rows);

} // namespace netpulse
