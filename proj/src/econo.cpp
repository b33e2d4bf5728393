#include "netpulse/econo.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "netpulse/csv.hpp"

namespace netpulse {

namespace {

constexpr double kConvergenceTol = 1e-13;
constexpr int kMaxSweeps = 2000;

struct Prepared {
    std::vector<double> y, x, t;
    std::vector<int> region, cy, yr; // group indices per observation
    std::vector<std::string> region_names;
    std::size_t n_regions = 0, n_country_years = 0, n_years = 0, n_countries = 0;
    std::size_t dropped = 0;
};

// rows usable for a log-log fit: positive regressand, positive (possibly
// lagged) regressor; regions must each belong to a single country
Prepared prepare(const std::vector<PanelObservation>& panel, const RegressionSpec& spec,
                 const std::string& sector) {
    std::unordered_map<std::string, double> lagged_ip;
    if (spec.lag > 0)
        for (const auto& o : panel)
            lagged_ip[o.region_id + "\x1f" + std::to_string(o.year + spec.lag)] = o.ip_pc;

    Prepared p;
    std::unordered_map<std::string, int> region_ix, country_ix, cy_ix, year_ix;
    std::unordered_map<std::string, std::string> region_country;
    for (const auto& o : panel) {
        double regressand = o.gdp_pc;
        if (!sector.empty()) {
            auto it = o.gva.find(sector);
            if (it == o.gva.end()) {
                ++p.dropped;
                continue;
            }
            regressand = it->second;
        }
        double regressor = o.ip_pc;
        if (spec.lag > 0) {
            auto it = lagged_ip.find(o.region_id + "\x1f" + std::to_string(o.year));
            if (it == lagged_ip.end()) {
                ++p.dropped;
                continue;
            }
            regressor = it->second;
        }
        if (!(regressand > 0.0) || !(regressor > 0.0)) {
            ++p.dropped;
            continue;
        }
        auto [rc, inserted] = region_country.try_emplace(o.region_id, o.country);
        if (!inserted && rc->second != o.country)
            throw std::runtime_error("region '" + o.region_id +
                                     "' appears under two countries");

        auto ix = [](auto& m, const std::string& key) {
            return m.try_emplace(key, static_cast<int>(m.size())).first->second;
        };
        p.region.push_back(ix(region_ix, o.region_id));
        if (static_cast<std::size_t>(p.region.back()) == p.region_names.size())
            p.region_names.push_back(o.region_id);
        p.cy.push_back(ix(cy_ix, o.country + "\x1f" + std::to_string(o.year)));
        p.yr.push_back(ix(year_ix, std::to_string(o.year)));
        ix(country_ix, o.country);
        p.y.push_back(std::log(regressand));
        p.x.push_back(std::log(regressor));
        p.t.push_back(o.year);
    }
    p.n_regions = region_ix.size();
    p.n_country_years = cy_ix.size();
    p.n_years = year_ix.size();
    p.n_countries = country_ix.size();
    return p;
}

RegressionSpec normalized(RegressionSpec spec) {
    if (spec.region_trends) spec.region_effects = true; // trends carry intercepts
    return spec;
}

// non-redundant parameter count of the absorbed effects (intercept included);
// assumes each country's region-by-year incidence is connected, which holds
// for the panels this project builds
std::size_t absorbed_dof(const Prepared& p, const RegressionSpec& spec) {
    const bool region = spec.region_effects;
    const bool ct = spec.country_year_effects;
    const bool year = spec.year_effects && !ct; // year effects nest inside theta_ct
    if (!region && !ct && !year) return 1;
    std::size_t r = 0;
    if (region) r += p.n_regions;
    if (ct) r += p.n_country_years - (region ? p.n_countries : 0);
    if (year) r += p.n_years - (region ? 1 : 0);
    if (spec.region_trends) {
        if (ct)
            r += p.n_regions - p.n_countries;
        else if (year)
            r += p.n_regions - 1;
        else
            r += p.n_regions;
    }
    return r;
}

struct RegionStat {
    std::vector<int> obs;
    double t_mean = 0.0, stt = 0.0;
};

FitResult fit_core(const Prepared& p, const RegressionSpec& spec) {
    const std::size_t n = p.y.size();
    if (n == 0) throw std::runtime_error("no usable observations after drops");

    std::vector<RegionStat> regions(p.n_regions);
    for (std::size_t i = 0; i < n; ++i)
        regions[static_cast<std::size_t>(p.region[i])].obs.push_back(static_cast<int>(i));
    for (auto& r : regions) {
        for (int i : r.obs) r.t_mean += p.t[static_cast<std::size_t>(i)];
        r.t_mean /= static_cast<double>(r.obs.size());
        for (int i : r.obs) {
            const double dt = p.t[static_cast<std::size_t>(i)] - r.t_mean;
            r.stt += dt * dt;
        }
    }
    if (spec.region_trends)
        for (std::size_t g = 0; g < regions.size(); ++g)
            if (regions[g].stt == 0.0)
                throw std::runtime_error("region trend is collinear for region '" +
                                         p.region_names[g] + "' (single time point)");

    const bool use_ct = spec.country_year_effects;
    const bool use_year = spec.year_effects && !use_ct;
    const std::size_t n_time = use_ct ? p.n_country_years : (use_year ? p.n_years : 0);
    const std::vector<int>& time_group = use_ct ? p.cy : p.yr;

    std::vector<double> yt = p.y, xt = p.x;
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        scale = std::max({scale, std::fabs(yt[i]), std::fabs(xt[i])});

    auto project_regions = [&](std::vector<double>& v) {
        double delta = 0.0;
        for (const auto& r : regions) {
            double mean = 0.0, stv = 0.0;
            for (int i : r.obs) mean += v[static_cast<std::size_t>(i)];
            mean /= static_cast<double>(r.obs.size());
            if (spec.region_trends) {
                for (int i : r.obs)
                    stv += (p.t[static_cast<std::size_t>(i)] - r.t_mean) *
                           v[static_cast<std::size_t>(i)];
                const double slope = stv / r.stt;
                for (int i : r.obs) {
                    const double fit =
                        mean + slope * (p.t[static_cast<std::size_t>(i)] - r.t_mean);
                    delta = std::max(delta, std::fabs(fit));
                    v[static_cast<std::size_t>(i)] -= fit;
                }
            } else {
                for (int i : r.obs) {
                    delta = std::max(delta, std::fabs(mean));
                    v[static_cast<std::size_t>(i)] -= mean;
                }
            }
        }
        return delta;
    };
    auto project_time = [&](std::vector<double>& v) {
        std::vector<double> sum(n_time, 0.0);
        std::vector<std::size_t> cnt(n_time, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[static_cast<std::size_t>(time_group[i])] += v[i];
            ++cnt[static_cast<std::size_t>(time_group[i])];
        }
        double delta = 0.0;
        for (std::size_t g = 0; g < n_time; ++g) sum[g] /= static_cast<double>(cnt[g]);
        for (std::size_t i = 0; i < n; ++i) {
            const double m = sum[static_cast<std::size_t>(time_group[i])];
            delta = std::max(delta, std::fabs(m));
            v[i] -= m;
        }
        return delta;
    };
    auto project_intercept = [&](std::vector<double>& v) {
        double mean = 0.0;
        for (double e : v) mean += e;
        mean /= static_cast<double>(n);
        for (double& e : v) e -= mean;
        return std::fabs(mean);
    };

    const bool has_region = spec.region_effects;
    const bool has_time = n_time > 0;
    if (!has_region && !has_time) {
        project_intercept(yt);
        project_intercept(xt);
    } else {
        for (int sweep = 0;; ++sweep) {
            double delta = 0.0;
            if (has_region) delta = std::max({delta, project_regions(yt), project_regions(xt)});
            if (has_time) delta = std::max({delta, project_time(yt), project_time(xt)});
            if (delta <= kConvergenceTol * scale) break;
            if (sweep >= kMaxSweeps)
                throw std::runtime_error("effect absorption did not converge");
        }
    }

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += xt[i] * xt[i];
        sxy += xt[i] * yt[i];
    }
    if (sxx <= 1e-12 * scale * scale)
        throw std::runtime_error("regressor is collinear with the absorbed effects");
    const double beta = sxy / sxx;

    FitResult res;
    res.beta = beta;
    res.n_obs = n;
    res.n_regions = p.n_regions;
    res.n_dropped = p.dropped;
    res.model_dof = absorbed_dof(p, spec) + 1;
    if (n < res.model_dof) throw std::runtime_error("more parameters than observations");

    double ssr = 0.0, meat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = yt[i] - beta * xt[i];
        ssr += e * e;
        meat += xt[i] * xt[i] * e * e;
    }
    double y_mean = 0.0;
    for (double v : p.y) y_mean += v;
    y_mean /= static_cast<double>(n);
    double sst = 0.0;
    for (double v : p.y) sst += (v - y_mean) * (v - y_mean);
    res.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 1.0;

    if (n > res.model_dof) {
        const double adj =
            static_cast<double>(n) / static_cast<double>(n - res.model_dof);
        res.robust_se = std::sqrt(adj * meat) / sxx;
    }
    return res;
}

} // namespace

FitResult fit_fe(const std::vector<PanelObservation>& panel, const RegressionSpec& raw_spec) {
    const RegressionSpec spec = normalized(raw_spec);
    return fit_core(prepare(panel, spec, ""), spec);
}

FitResult fit_fe_dummies(const std::vector<PanelObservation>& panel,
                         const RegressionSpec& raw_spec) {
    const RegressionSpec spec = normalized(raw_spec);
    const Prepared p = prepare(panel, spec, "");
    const std::size_t n = p.y.size();
    if (n == 0) throw std::runtime_error("no usable observations after drops");

    double t_mean = 0.0;
    for (double t : p.t) t_mean += t;
    t_mean /= static_cast<double>(n);

    std::size_t m = 1; // intercept
    if (spec.region_effects) m += p.n_regions;
    if (spec.year_effects) m += p.n_years;
    if (spec.country_year_effects) m += p.n_country_years;
    if (spec.region_trends) m += p.n_regions;

    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        Eigen::Index col = 0;
        D(row, col++) = 1.0;
        if (spec.region_effects) {
            D(row, col + p.region[i]) = 1.0;
            col += static_cast<Eigen::Index>(p.n_regions);
        }
        if (spec.year_effects) {
            D(row, col + p.yr[i]) = 1.0;
            col += static_cast<Eigen::Index>(p.n_years);
        }
        if (spec.country_year_effects) {
            D(row, col + p.cy[i]) = 1.0;
            col += static_cast<Eigen::Index>(p.n_country_years);
        }
        if (spec.region_trends) D(row, col + p.region[i]) = p.t[i] - t_mean;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> dqr(D);
    const auto rank = dqr.rank();
    const auto& perm = dqr.colsPermutation().indices();

    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), rank + 1);
    for (std::size_t i = 0; i < n; ++i) X(static_cast<Eigen::Index>(i), 0) = p.x[i];
    for (Eigen::Index c = 0; c < rank; ++c) X.col(c + 1) = D.col(perm[c]);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> xqr(X);
    if (xqr.rank() < X.cols())
        throw std::runtime_error("regressor is collinear with the absorbed effects");
    Eigen::VectorXd yv(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) yv(static_cast<Eigen::Index>(i)) = p.y[i];
    const Eigen::VectorXd coef = xqr.solve(yv);
    const Eigen::VectorXd resid = yv - X * coef;

    FitResult res;
    res.beta = coef(0);
    res.n_obs = n;
    res.n_regions = p.n_regions;
    res.n_dropped = p.dropped;
    res.model_dof = static_cast<std::size_t>(rank) + 1;
    if (n < res.model_dof) throw std::runtime_error("more parameters than observations");

    const double sst = (yv.array() - yv.mean()).square().sum();
    const double ssr = resid.squaredNorm();
    res.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 1.0;

    if (n > res.model_dof) {
        const Eigen::MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(
            Eigen::MatrixXd::Identity(X.cols(), X.cols()));
        const Eigen::MatrixXd meat =
            X.transpose() * resid.array().square().matrix().asDiagonal() * X;
        const double adj =
            static_cast<double>(n) / static_cast<double>(n - res.model_dof);
        res.robust_se = std::sqrt(adj * (xtx_inv * meat * xtx_inv)(0, 0));
    }
    return res;
}

FitResult fit_sectoral(const std::vector<PanelObservation>& panel, const std::string& sector,
                       std::size_t min_rows) {
    RegressionSpec spec;
    spec.region_effects = true;
    spec.year_effects = true;
    const Prepared p = prepare(panel, spec, sector);
    if (p.y.size() < min_rows)
        throw std::runtime_error("sector '" + sector + "' has " + std::to_string(p.y.size()) +
                                 " usable rows, need at least " + std::to_string(min_rows));
    return fit_core(p, spec);
}

std::vector<PanelObservation> read_panel_csv(const std::string& path) {
    const auto table = CsvTable::from_file(path);
    const auto c_region = table.column("region_id");
    const auto c_country = table.column("country");
    const auto c_year = table.column("year");
    const auto c_gdp = table.column("gdp_pc");
    const auto c_ip = table.column("ip_pc");
    std::vector<std::pair<std::size_t, std::string>> sector_cols;
    for (std::size_t c = 0; c < table.header().size(); ++c)
        if (table.header()[c].rfind("gva_", 0) == 0)
            sector_cols.emplace_back(c, table.header()[c].substr(4));

    std::vector<PanelObservation> out;
    out.reserve(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        PanelObservation o;
        o.region_id = table.cell(r, c_region);
        o.country = table.cell(r, c_country);
        o.year = static_cast<int>(table.integer(r, c_year));
        o.gdp_pc = table.num(r, c_gdp);
        o.ip_pc = table.num(r, c_ip);
        if (!(o.gdp_pc > 0)) throw std::runtime_error(path + ": gdp_pc must be positive");
        if (o.ip_pc < 0) throw std::runtime_error(path + ": ip_pc must be nonnegative");
        for (const auto& [col, name] : sector_cols) {
            const auto& cell = table.cell(r, col);
            if (cell.empty() || cell == "NA") continue;
            o.gva[name] = table.num(r, col);
        }
        out.push_back(std::move(o));
    }
    return out;
}

std::vector<std::string> panel_sectors(const std::vector<PanelObservation>& panel) {
    std::vector<std::string> names;
    for (const auto& o : panel)
        for (const auto& [name, value] : o.gva)
            if (std::find(names.begin(), names.end(), name) == names.end())
                names.push_back(name);
    std::sort(names.begin(), names.end());
    return names;
}

SampleFilter parse_filter(const std::string& text) {
    SampleFilter f;
    if (text.empty() || text == "none") return f;
    if (text == "trim-gdp")
        f.kind = FilterKind::TrimGdp;
    else if (text == "below-median-gdp")
        f.kind = FilterKind::BelowMedianGdp;
    else if (text == "above-median-gdp")
        f.kind = FilterKind::AboveMedianGdp;
    else if (text == "trim-ip")
        f.kind = FilterKind::TrimIp;
    else if (text == "year<=2008")
        f.kind = FilterKind::YearMax2008;
    else if (text == "year>2008")
        f.kind = FilterKind::YearAfter2008;
    else if (text.rfind("exclude=", 0) == 0) {
        f.kind = FilterKind::ExcludeCountries;
        std::string rest = text.substr(8);
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            const auto comma = rest.find(',', pos);
            const auto end = comma == std::string::npos ? rest.size() : comma;
            if (end > pos) f.countries.push_back(rest.substr(pos, end - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (f.countries.empty())
            throw std::runtime_error("exclude= filter needs at least one country");
    } else {
        throw std::runtime_error(
            "unknown filter '" + text +
            "' (valid: none, trim-gdp, below-median-gdp, above-median-gdp, trim-ip, "
            "exclude=<countries>, year<=2008, year>2008)");
    }
    return f;
}

namespace {

// value thresholds that drop exactly floor(0.05 n) rows from each tail when
// values are distinct
std::pair<double, double> trim_bounds(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const std::size_t m = n / 20;
    return {values[m], values[n - 1 - m]};
}

double upper_median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return values[values.size() / 2];
}

} // namespace

std::vector<PanelObservation> apply_sample_filter(const std::vector<PanelObservation>& panel,
                                                  const SampleFilter& filter,
                                                  FilterReport* report) {
    if (panel.empty()) throw std::runtime_error("empty panel");
    std::pair<double, double> bounds{0.0, 0.0};
    double median = 0.0;
    {
        std::vector<double> values;
        values.reserve(panel.size());
        const bool on_ip = filter.kind == FilterKind::TrimIp;
        for (const auto& o : panel) values.push_back(on_ip ? o.ip_pc : o.gdp_pc);
        if (filter.kind == FilterKind::TrimGdp || filter.kind == FilterKind::TrimIp)
            bounds = trim_bounds(values);
        if (filter.kind == FilterKind::BelowMedianGdp ||
            filter.kind == FilterKind::AboveMedianGdp)
            median = upper_median(values);
    }

    auto keep = [&](const PanelObservation& o) -> bool {
        switch (filter.kind) {
            case FilterKind::None:
                return true;
            case FilterKind::TrimGdp:
                return o.gdp_pc >= bounds.first && o.gdp_pc <= bounds.second;
            case FilterKind::BelowMedianGdp:
                return o.gdp_pc < median;
            case FilterKind::AboveMedianGdp:
                return o.gdp_pc >= median;
            case FilterKind::TrimIp:
                return o.ip_pc >= bounds.first && o.ip_pc <= bounds.second;
            case FilterKind::ExcludeCountries:
                return std::find(filter.countries.begin(), filter.countries.end(), o.country) ==
                       filter.countries.end();
            case FilterKind::YearMax2008:
                return o.year <= 2008;
            case FilterKind::YearAfter2008:
                return o.year > 2008;
        }
        return true;
    };

    std::vector<PanelObservation> out;
    for (const auto& o : panel)
        if (keep(o)) out.push_back(o);
    if (report) {
        report->n_before = panel.size();
        report->n_after = out.size();
    }
    if (out.empty()) throw std::runtime_error("sample filter leaves no rows");
    return out;
}

} // namespace netpulse
