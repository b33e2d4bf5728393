#include "netpulse/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "netpulse/csv.hpp"
#include "netpulse/dates.hpp"
#include "netpulse/rng.hpp"

namespace netpulse {

double logistic(double t, const LogisticParams& p) {
    return p.K / (1.0 + std::exp(-p.alpha * (t - p.beta)));
}

SaturationWindow saturation_window(const LogisticParams& p) {
    if (!p.valid()) throw std::domain_error("saturation_window: invalid parameters");
    const double span = std::log(99.0) / p.alpha;
    return SaturationWindow{p.beta - span, p.beta + span, 2.0 * span};
}

namespace {

// unit logistic in the (g, b) = (1/alpha, beta) parameterization
inline double unit_logistic(double t, double g, double b) {
    return 1.0 / (1.0 + std::exp(-(t - b) / g));
}

struct CountryWork {
    const CountryMonthlySeries* s;
    double g0, b0; // deterministic initial values
};

// sum of squared residuals of y against K * L(t; g, b)
double ssr(const CountryMonthlySeries& s, double K, double g, double b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        const double r = s.y[i] - K * unit_logistic(s.t[i], g, b);
        acc += r * r;
    }
    return acc;
}

// log posterior of (g, b) for one country, up to a constant
double log_post(const CountryMonthlySeries& s, double K, double sigma2, double g, double b,
                double mu_g, double mu_b, double og2, double ob2) {
    if (g <= 1e-6) return -1e300; // alpha must stay positive and finite
    const double dg = g - mu_g, db = b - mu_b;
    return -0.5 * ssr(s, K, g, b) / sigma2 - 0.5 * dg * dg / og2 - 0.5 * db * db / ob2;
}

// one Gauss-Newton step for the posterior mode of (g, b); returns step norm
double gn_step(const CountryMonthlySeries& s, double K, double sigma2, double& g, double& b,
               double mu_g, double mu_b, double og2, double ob2) {
    double J11 = 0.0, J12 = 0.0, J22 = 0.0, r1 = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        const double L = unit_logistic(s.t[i], g, b);
        const double w = L * (1.0 - L);
        const double dLdg = -w * (s.t[i] - b) / (g * g);
        const double dLdb = -w / g;
        const double fg = K * dLdg, fb = K * dLdb;
        const double res = s.y[i] - K * L;
        J11 += fg * fg;
        J12 += fg * fb;
        J22 += fb * fb;
        r1 += fg * res;
        r2 += fb * res;
    }
    // (J'J/sigma2 + Omega^-1) d = J'r/sigma2 - Omega^-1 (phi - mu)
    const double a11 = J11 / sigma2 + 1.0 / og2;
    const double a12 = J12 / sigma2;
    const double a22 = J22 / sigma2 + 1.0 / ob2;
    const double v1 = r1 / sigma2 - (g - mu_g) / og2;
    const double v2 = r2 / sigma2 - (b - mu_b) / ob2;
    const double det = a11 * a22 - a12 * a12;
    if (!(std::fabs(det) > 1e-300)) return 0.0;
    double dg = (a22 * v1 - a12 * v2) / det;
    double db = (a11 * v2 - a12 * v1) / det;

    // backtracking on the exact objective
    const double base = log_post(s, K, sigma2, g, b, mu_g, mu_b, og2, ob2);
    double scale = 1.0;
    for (int tries = 0; tries < 30; ++tries) {
        const double ng = g + scale * dg, nb = b + scale * db;
        if (ng > 1e-6 &&
            log_post(s, K, sigma2, ng, nb, mu_g, mu_b, og2, ob2) >= base) {
            g = ng;
            b = nb;
            return std::fabs(scale * dg) + std::fabs(scale * db);
        }
        scale *= 0.5;
    }
    return 0.0;
}

} // namespace

MixedEffectsFit fit_saem(const std::vector<CountryMonthlySeries>& input, const SaemConfig& cfg) {
    if (cfg.iterations < 1 || cfg.chains < 1)
        throw std::invalid_argument("fit_saem: iterations and chains must be positive");

    MixedEffectsFit fit;
    fit.seed = cfg.seed;
    fit.iterations = cfg.iterations;

    // drop degenerate series up front
    std::vector<const CountryMonthlySeries*> series;
    for (const auto& s : input) {
        if (s.t.size() != s.y.size() || static_cast<int>(s.t.size()) < cfg.min_months) {
            fit.dropped.push_back(s.country);
            continue;
        }
        double mean = 0.0;
        for (double v : s.y) mean += v;
        mean /= static_cast<double>(s.y.size());
        double var = 0.0;
        for (double v : s.y) var += (v - mean) * (v - mean);
        if (var <= 1e-18 || mean <= 0.0) {
            fit.dropped.push_back(s.country);
            continue;
        }
        series.push_back(&s);
    }
    if (series.empty()) throw std::domain_error("fit_saem: no usable series");
    const std::size_t C = series.size();

    // deterministic initialization
    double ymax = 0.0;
    std::size_t n_total = 0;
    double Syy = 0.0;
    for (const auto* s : series) {
        for (double v : s->y) {
            ymax = std::max(ymax, v);
            Syy += v * v;
        }
        n_total += s->y.size();
    }
    double K = 1.05 * ymax;

    std::vector<double> g0(C), b0(C);
    for (std::size_t c = 0; c < C; ++c) {
        const auto& s = *series[c];
        // logit-linear regression on interior points: ln(y/(K-y)) ~ a t + i
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            if (s.y[i] <= 1e-12 || s.y[i] >= K - 1e-12) continue;
            const double u = std::log(s.y[i] / (K - s.y[i]));
            sx += s.t[i];
            sy += u;
            sxx += s.t[i] * s.t[i];
            sxy += s.t[i] * u;
            ++n;
        }
        double a = 0.02, inter = 0.0;
        if (n >= 2) {
            const double det = n * sxx - sx * sx;
            if (std::fabs(det) > 1e-12) {
                a = (n * sxy - sx * sy) / det;
                inter = (sy - a * sx) / n;
            }
        }
        if (!(a > 1e-4)) a = 1e-4;
        if (a > 10.0) a = 10.0;
        g0[c] = 1.0 / a;
        double beta0 = -inter / a;
        const double tmin = *std::min_element(s.t.begin(), s.t.end());
        const double tmax = *std::max_element(s.t.begin(), s.t.end());
        b0[c] = std::clamp(beta0, tmin - 10.0 * (tmax - tmin) - 1.0,
                           tmax + 10.0 * (tmax - tmin) + 1.0);
    }

    double mu_g = 0.0, mu_b = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        mu_g += g0[c];
        mu_b += b0[c];
    }
    mu_g /= static_cast<double>(C);
    mu_b /= static_cast<double>(C);
    double og2 = 1e-4, ob2 = 1.0;
    for (std::size_t c = 0; c < C; ++c) {
        og2 += (g0[c] - mu_g) * (g0[c] - mu_g) / static_cast<double>(C);
        ob2 += (b0[c] - mu_b) * (b0[c] - mu_b) / static_cast<double>(C);
    }
    double sigma2 = 0.0;
    for (std::size_t c = 0; c < C; ++c) sigma2 += ssr(*series[c], K, g0[c], b0[c]);
    sigma2 = std::max(sigma2 / static_cast<double>(n_total), 1e-12);

    // chain states and per-country generators
    const int m = cfg.chains;
    std::vector<double> ch_g(C * m), ch_b(C * m);
    std::vector<Rng> rng;
    rng.reserve(C);
    for (std::size_t c = 0; c < C; ++c) {
        const std::string& name = series[c]->country;
        rng.emplace_back(derive_seed(cfg.seed, fnv1a64(name.data(), name.size())));
        for (int j = 0; j < m; ++j) {
            ch_g[c * m + j] = g0[c];
            ch_b[c * m + j] = b0[c];
        }
    }
    std::vector<double> step_g(C), step_b(C), acc_rate(C, 0.3);
    for (std::size_t c = 0; c < C; ++c) {
        step_g[c] = std::max(0.05 * g0[c], 1e-3);
        step_b[c] = 2.0;
    }

    // smoothed sufficient statistics
    std::vector<double> s1_g(C), s1_b(C), s2_g(C), s2_b(C);
    for (std::size_t c = 0; c < C; ++c) {
        s1_g[c] = g0[c];
        s1_b[c] = b0[c];
        s2_g[c] = g0[c] * g0[c];
        s2_b[c] = b0[c] * b0[c];
    }
    double SyL = 0.0, SLL = 0.0;
    {
        double syl = 0.0, sll = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            const auto& s = *series[c];
            for (std::size_t i = 0; i < s.t.size(); ++i) {
                const double L = unit_logistic(s.t[i], g0[c], b0[c]);
                syl += s.y[i] * L;
                sll += L * L;
            }
        }
        SyL = syl;
        SLL = sll;
    }

    const int burn = static_cast<int>(cfg.burn_fraction * cfg.iterations);
    for (int k = 1; k <= cfg.iterations; ++k) {
        const double gamma = (k <= burn) ? 1.0 : 1.0 / static_cast<double>(k - burn);

        double it_SyL = 0.0, it_SLL = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            const auto& s = *series[c];
            int accepted = 0;
            double mean_g = 0.0, mean_b = 0.0, mean_gg = 0.0, mean_bb = 0.0;
            double mean_syl = 0.0, mean_sll = 0.0;
            for (int j = 0; j < m; ++j) {
                double& g = ch_g[c * m + j];
                double& b = ch_b[c * m + j];
                double lp = log_post(s, K, sigma2, g, b, mu_g, mu_b, og2, ob2);
                const double pg = g + step_g[c] * rng[c].normal();
                const double pb = b + step_b[c] * rng[c].normal();
                const double lp_new = log_post(s, K, sigma2, pg, pb, mu_g, mu_b, og2, ob2);
                if (std::log(std::max(rng[c].uniform(), 1e-300)) < lp_new - lp) {
                    g = pg;
                    b = pb;
                    ++accepted;
                }
                mean_g += g;
                mean_b += b;
                mean_gg += g * g;
                mean_bb += b * b;
                for (std::size_t i = 0; i < s.t.size(); ++i) {
                    const double L = unit_logistic(s.t[i], g, b);
                    mean_syl += s.y[i] * L;
                    mean_sll += L * L;
                }
            }
            const double inv_m = 1.0 / m;
            s1_g[c] += gamma * (mean_g * inv_m - s1_g[c]);
            s1_b[c] += gamma * (mean_b * inv_m - s1_b[c]);
            s2_g[c] += gamma * (mean_gg * inv_m - s2_g[c]);
            s2_b[c] += gamma * (mean_bb * inv_m - s2_b[c]);
            it_SyL += mean_syl * inv_m;
            it_SLL += mean_sll * inv_m;

            // proposal-scale adaptation, frozen after burn-in
            if (k <= burn) {
                acc_rate[c] += 0.1 * (static_cast<double>(accepted) / m - acc_rate[c]);
                const double f = std::exp(0.3 * (acc_rate[c] - 0.3));
                step_g[c] = std::clamp(step_g[c] * f, 1e-6, 1e3);
                step_b[c] = std::clamp(step_b[c] * f, 1e-6, 1e3);
            }
        }
        SyL += gamma * (it_SyL - SyL);
        SLL += gamma * (it_SLL - SLL);

        // M step: closed forms from the smoothed statistics
        K = SyL / std::max(SLL, 1e-300);
        if (!(K > 0.0)) K = 1.05 * ymax;
        mu_g = 0.0;
        mu_b = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            mu_g += s1_g[c];
            mu_b += s1_b[c];
        }
        mu_g /= static_cast<double>(C);
        mu_b /= static_cast<double>(C);
        og2 = 0.0;
        ob2 = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            og2 += s2_g[c] - 2.0 * mu_g * s1_g[c] + mu_g * mu_g;
            ob2 += s2_b[c] - 2.0 * mu_b * s1_b[c] + mu_b * mu_b;
        }
        og2 = std::max(og2 / static_cast<double>(C), 1e-10);
        ob2 = std::max(ob2 / static_cast<double>(C), 1e-8);
        sigma2 = std::max((Syy - 2.0 * K * SyL + K * K * SLL) / static_cast<double>(n_total),
                          1e-12);
    }

    // deterministic polish: joint nonlinear least squares over K and the
    // per-country curves, alternating Gauss-Newton on each (g, b) with the
    // closed-form K. The prior is dropped here (flat) so that exactly
    // identifiable data is reproduced to machine precision; the stochastic
    // phase above has already placed the iterates in the right basin.
    constexpr double kFlat = 1e30;
    std::vector<double> pg(C), pb(C);
    for (std::size_t c = 0; c < C; ++c) {
        pg[c] = s1_g[c];
        pb[c] = s1_b[c];
    }
    double prev_rmse = 1e300;
    for (int round = 0; round < cfg.polish_iterations; ++round) {
        for (std::size_t c = 0; c < C; ++c)
            for (int it = 0; it < 8; ++it)
                if (gn_step(*series[c], K, 1.0, pg[c], pb[c], pg[c], pb[c], kFlat, kFlat) <
                    1e-14)
                    break;
        double syl = 0.0, sll = 0.0, total_ssr = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            const auto& s = *series[c];
            for (std::size_t i = 0; i < s.t.size(); ++i) {
                const double L = unit_logistic(s.t[i], pg[c], pb[c]);
                syl += s.y[i] * L;
                sll += L * L;
            }
        }
        if (sll > 1e-300 && syl > 0.0) K = syl / sll;
        for (std::size_t c = 0; c < C; ++c) total_ssr += ssr(*series[c], K, pg[c], pb[c]);
        sigma2 = std::max(total_ssr / static_cast<double>(n_total), 1e-12);
        const double rmse = std::sqrt(total_ssr / static_cast<double>(n_total));
        if (std::fabs(prev_rmse - rmse) < 1e-15) break;
        prev_rmse = rmse;
    }
    mu_g = 0.0;
    mu_b = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        mu_g += pg[c];
        mu_b += pb[c];
    }
    mu_g /= static_cast<double>(C);
    mu_b /= static_cast<double>(C);

    double total_ssr = 0.0;
    for (std::size_t c = 0; c < C; ++c) total_ssr += ssr(*series[c], K, pg[c], pb[c]);

    fit.mean_field = LogisticParams{K, 1.0 / mu_g, mu_b};
    fit.sigma = std::sqrt(sigma2);
    fit.omega_g = std::sqrt(og2);
    fit.omega_b = std::sqrt(ob2);
    fit.rmse = std::sqrt(total_ssr / static_cast<double>(n_total));
    for (std::size_t c = 0; c < C; ++c) {
        CountryEffect e;
        e.country = series[c]->country;
        e.alpha = 1.0 / pg[c];
        e.beta = pb[c];
        e.delta_alpha = e.alpha - fit.mean_field.alpha;
        e.delta_beta = e.beta - fit.mean_field.beta;
        fit.per_country.push_back(std::move(e));
    }
    return fit;
}

std::string category_name(Category c) {
    switch (c) {
        case Category::Saturated: return "Saturated";
        case Category::High: return "High";
        case Category::Medium: return "Medium";
        case Category::Low: return "Low";
    }
    return "Low";
}

Category categorize(double ipc_2012) {
    if (ipc_2012 < 0.0) throw std::domain_error("categorize: negative IP per capita");
    if (ipc_2012 >= 0.32) return Category::Saturated;
    if (ipc_2012 >= 0.16) return Category::High;
    if (ipc_2012 >= 0.08) return Category::Medium;
    return Category::Low;
}

std::vector<SaturationSummary> rank_countries(
    const MixedEffectsFit& fit, const std::vector<CountryMonthlySeries>& series,
    const std::vector<std::pair<std::string, int>>& cities_per_country) {
    std::map<std::string, const CountryMonthlySeries*> by_name;
    for (const auto& s : series) by_name[s.country] = &s;
    std::map<std::string, int> n_cities;
    for (const auto& [name, n] : cities_per_country) n_cities[name] = n;

    double t_end = 0.0;
    for (const auto& s : series)
        for (double t : s.t) t_end = std::max(t_end, t);

    auto year_level = [&](const CountryMonthlySeries& s, int year) -> std::pair<bool, double> {
        double sum = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            if (year_of_month_index(s.t[i]) == year) {
                sum += s.y[i];
                ++n;
            }
        }
        if (n == 0) return {false, 0.0};
        return {true, sum / n};
    };

    struct Row {
        std::string country;
        double level06, level12;
        const CountryEffect* eff;
    };
    std::vector<Row> rows;
    for (const auto& e : fit.per_country) {
        auto it = by_name.find(e.country);
        if (it == by_name.end()) continue;
        auto [ok06, l06] = year_level(*it->second, 2006);
        auto [ok12, l12] = year_level(*it->second, 2012);
        if (!ok06 || !ok12)
            throw std::domain_error("rank_countries: country '" + e.country +
                                    "' lacks 2006 or 2012 observations");
        rows.push_back(Row{e.country, l06, l12, &e});
    }

    auto rank_of = [&](auto level_of) {
        std::vector<std::size_t> order(rows.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double la = level_of(rows[a]), lb = level_of(rows[b]);
            if (la != lb) return la > lb;
            return rows[a].country < rows[b].country;
        });
        std::vector<int> rank(rows.size());
        for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i) + 1;
        return rank;
    };
    const std::vector<int> r06 = rank_of([](const Row& r) { return r.level06; });
    const std::vector<int> r12 = rank_of([](const Row& r) { return r.level12; });

    const double mf_end = logistic(t_end, fit.mean_field);
    std::vector<SaturationSummary> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        SaturationSummary s;
        s.country = r.country;
        auto itc = n_cities.find(r.country);
        s.n_cities = itc == n_cities.end() ? 0 : itc->second;
        s.rank_2006 = r06[i];
        s.rank_2012 = r12[i];
        s.rank_change = s.rank_2006 - s.rank_2012;
        s.ipc_2012 = r.level12;
        s.category = categorize(r.level12);
        const LogisticParams pc{fit.mean_field.K, r.eff->alpha, r.eff->beta};
        s.asymptotic_limit = fit.mean_field.K + (logistic(t_end, pc) - mf_end);
        s.growth_rate = r.eff->alpha;
        const SaturationWindow w = saturation_window(pc);
        s.year_1pct = year_of_month_index(w.t_1pct);
        s.year_99pct = year_of_month_index(w.t_99pct);
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const SaturationSummary& a, const SaturationSummary& b) {
        return a.rank_2012 < b.rank_2012;
    });
    return out;
}

std::vector<CountryMonthlySeries> read_series_csv(const std::string& path) {
    CsvTable t = CsvTable::from_file(path);
    const std::size_t c_country = t.column("country");
    const std::size_t c_month = t.column("month_index");
    const std::size_t c_ipc = t.column("ipc");
    std::map<std::string, CountryMonthlySeries> by_name;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        auto& s = by_name[t.cell(i, c_country)];
        s.country = t.cell(i, c_country);
        s.t.push_back(t.num(i, c_month));
        s.y.push_back(t.num(i, c_ipc));
    }
    std::vector<CountryMonthlySeries> out;
    for (auto& [name, s] : by_name) out.push_back(std::move(s));
    return out;
}

std::string write_fit_csv(const MixedEffectsFit& fit) {
    CsvWriter w({"kind", "country", "K", "alpha", "beta", "delta_alpha", "delta_beta", "rmse",
                 "sigma", "iterations", "seed"});
    w.field("mean_field")
        .field("")
        .field(fit.mean_field.K)
        .field(fit.mean_field.alpha)
        .field(fit.mean_field.beta)
        .field(0.0)
        .field(0.0)
        .field(fit.rmse)
        .field(fit.sigma)
        .field(fit.iterations)
        .field(static_cast<std::int64_t>(fit.seed));
    w.end_row();
    for (const auto& e : fit.per_country) {
        w.field("country")
            .field(e.country)
            .field(fit.mean_field.K)
            .field(e.alpha)
            .field(e.beta)
            .field(e.delta_alpha)
            .field(e.delta_beta)
            .field(0.0)
            .field(0.0)
            .field(fit.iterations)
            .field(static_cast<std::int64_t>(fit.seed));
        w.end_row();
    }
    return w.str();
}

std::string write_ranking_csv(const std::vector<SaturationSummary>& rows) {
    CsvWriter w({"country", "n_cities", "rank_2006", "rank_2012", "change", "category_2012",
                 "asymptotic_limit", "growth_rate", "year_1pct", "year_99pct"});
    for (const auto& r : rows) {
        w.field(r.country)
            .field(r.n_cities)
            .field(r.rank_2006)
            .field(r.rank_2012)
            .field(r.rank_change)
            .field(category_name(r.category))
            .field(r.asymptotic_limit)
            .field(r.growth_rate)
            .field(r.year_1pct)
            .field(r.year_99pct);
        w.end_row();
    }
    return w.str();
}

} // namespace netpulse
