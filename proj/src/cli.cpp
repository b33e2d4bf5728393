#include "netpulse/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "netpulse/aggregate.hpp"
#include "netpulse/chrono.hpp"
#include "netpulse/csv.hpp"
#include "netpulse/diffusion.hpp"
#include "netpulse/econo.hpp"
#include "netpulse/forest.hpp"
#include "netpulse/geo.hpp"
#include "netpulse/manifest.hpp"
#include "netpulse/svgplot.hpp"
#include "netpulse/synth.hpp"

namespace netpulse {

namespace {

constexpr int kOk = 0, kComputeError = 1, kUsageError = 2;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

void fail(const std::string& msg) { std::fprintf(stderr, "error: %s\n", msg.c_str()); }

std::string flag_string(const RegressionSpec& s) {
    std::string out;
    auto add = [&](const char* name) {
        if (!out.empty()) out += '+';
        out += name;
    };
    if (s.region_effects) add("region");
    if (s.year_effects) add("year");
    if (s.country_year_effects) add("country-year");
    if (s.region_trends) add("trends");
    if (out.empty()) out = "pooled";
    return out;
}

struct CommonOpts {
    std::uint64_t seed = 1;
    int workers = 1;
    std::string config;
};

// ---------------------------------------------------------------- synth ----

int cmd_synth(const CommonOpts& common, bool seed_given, const std::string& out_dir) {
    Timer timer;
    WorldConfig cfg;
    try {
        if (!common.config.empty()) cfg = read_world_config(common.config);
        if (seed_given || common.config.empty()) cfg.seed = common.seed;
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }
    try {
        WorldFiles files;
        gen_world(cfg, out_dir, &files);
        RunManifest m;
        m.command = "synth";
        m.config_path = common.config;
        m.seed = cfg.seed;
        m.workers = common.workers;
        m.outputs = {files.boundaries, files.scans,       files.geo,
                     files.bins,       files.counts,      files.survey,
                     files.panel,      files.truth_curves, files.truth_sleep,
                     files.truth_panel};
        m.wall_ms = timer.ms();
        m.write(out_dir + "/synth_manifest.json");
    } catch (const std::exception& e) {
        fail(e.what());
        return kComputeError;
    }
    return kOk;
}

// ------------------------------------------------------------ aggregate ----

struct AggregateOpts {
    std::string scans, geo, boundaries, out_dir;
    int min_days = 20;
    std::int64_t cutoff = 500;
};

int cmd_aggregate(const CommonOpts& common, const AggregateOpts& o) {
    Timer timer;
    std::vector<ScanRecord> scans;
    std::vector<GeoRangeRecord> ranges;
    std::vector<UrbanBoundary> boundaries;
    try {
        scans = read_scan_csv(o.scans);
        ranges = read_geo_csv(o.geo);
        boundaries = read_boundaries(o.boundaries);
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }

    std::vector<SegmentBin> bins;
    std::vector<MonthlyCityCount> corrected;
    AssignStats stats;
    MissoniResult missoni;
    try {
        GeoIndex::BuildStats geo_stats;
        const GeoIndex index = GeoIndex::build(ranges, &geo_stats);
        const auto located = assign_records(scans, index, boundaries, common.workers, &stats);
        bins = bin_activity(located, boundaries, common.workers);
        const auto monthly = monthly_unique_ips(located, boundaries, o.min_days);
        if (!monthly.empty()) {
            missoni = missoni_correct(monthly, o.cutoff);
            corrected = missoni.corrected;
        }
    } catch (const std::exception& e) {
        fail(e.what());
        return kComputeError;
    }

    try {
        std::filesystem::create_directories(o.out_dir);
        write_file(o.out_dir + "/bins.csv", write_bins_csv(bins));
        write_file(o.out_dir + "/counts.csv", write_counts_csv(corrected));
        RunManifest m;
        m.command = "aggregate";
        m.seed = common.seed;
        m.workers = common.workers;
        m.inputs = {{"scans", o.scans}, {"geo", o.geo}, {"boundaries", o.boundaries}};
        m.outputs = {o.out_dir + "/bins.csv", o.out_dir + "/counts.csv"};
        m.diagnostics = {{"assigned", std::to_string(stats.assigned)},
                         {"unlocated", std::to_string(stats.unlocated)},
                         {"unassigned", std::to_string(stats.unassigned)},
                         {"dropped_cities", std::to_string(missoni.dropped_cities.size())}};
        m.wall_ms = timer.ms();
        m.write(o.out_dir + "/aggregate_manifest.json");
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }
    return kOk;
}

// ------------------------------------------------------------ diffusion ----

struct DiffusionOpts {
    std::string counts, boundaries, out_dir;
    SaemConfig saem;
};

int cmd_diffusion(const CommonOpts& common, const DiffusionOpts& o) {
    Timer timer;
    std::vector<MonthlyCityCount> counts;
    std::vector<UrbanBoundary> boundaries;
    try {
        counts = read_counts_csv(o.counts);
        boundaries = read_boundaries(o.boundaries);
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }

    MixedEffectsFit fit;
    std::vector<SaturationSummary> ranking;
    std::vector<CountryMonthlySeries> series;
    std::vector<std::pair<std::string, int>> cities;
    try {
        for (const auto& cs : country_ipc_series(counts, boundaries)) {
            CountryMonthlySeries s;
            s.country = cs.country;
            s.t.assign(cs.month_indices.begin(), cs.month_indices.end());
            s.y = cs.ipc;
            series.push_back(std::move(s));
            cities.emplace_back(cs.country, cs.n_cities);
        }
        SaemConfig cfg = o.saem;
        cfg.seed = common.seed;
        fit = fit_saem(series, cfg);
        ranking = rank_countries(fit, series, cities);
    } catch (const std::exception& e) {
        fail(e.what());
        return kComputeError;
    }

    try {
        std::filesystem::create_directories(o.out_dir);
        write_file(o.out_dir + "/fit.csv", write_fit_csv(fit));
        write_file(o.out_dir + "/ranking.csv", write_ranking_csv(ranking));
        CsvWriter curves({"country", "month_index", "observed_ipc", "fitted_ipc"});
        for (const auto& s : series) {
            const CountryEffect* eff = nullptr;
            for (const auto& e : fit.per_country)
                if (e.country == s.country) eff = &e;
            if (!eff) continue; // dropped series carry no fitted curve
            LogisticParams p{fit.mean_field.K, eff->alpha, eff->beta};
            for (std::size_t i = 0; i < s.t.size(); ++i) {
                curves.field(s.country)
                    .field(format_double(s.t[i]))
                    .field(s.y[i])
                    .field(logistic(s.t[i], p));
                curves.end_row();
            }
        }
        curves.to_file(o.out_dir + "/curves.csv");

        RunManifest m;
        m.command = "diffusion";
        m.seed = common.seed;
        m.workers = common.workers;
        m.inputs = {{"counts", o.counts}, {"boundaries", o.boundaries}};
        m.outputs = {o.out_dir + "/fit.csv", o.out_dir + "/ranking.csv",
                     o.out_dir + "/curves.csv"};
        m.diagnostics = {{"rmse", format_double(fit.rmse)},
                         {"sigma", format_double(fit.sigma)},
                         {"countries", std::to_string(fit.per_country.size())},
                         {"dropped", std::to_string(fit.dropped.size())}};
        m.wall_ms = timer.ms();
        m.write(o.out_dir + "/diffusion_manifest.json");
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }
    return kOk;
}

// ---------------------------------------------------------------- sleep ----

struct SleepOpts {
    std::string bins, boundaries, survey, model, out_dir;
    int trees = 200;
    int min_days = 30;
    std::int64_t min_online = 100;
    std::size_t min_respondents = 10;
};

int cmd_sleep_train(const CommonOpts& common, const SleepOpts& o) {
    Timer timer;
    std::vector<SegmentBin> bins;
    std::vector<UrbanBoundary> boundaries;
    std::vector<SurveyEntry> survey;
    try {
        bins = read_bins_csv(o.bins);
        boundaries = read_boundaries(o.boundaries);
        survey = read_survey_csv(o.survey);
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }

    TreeEnsemble ens;
    std::vector<double> importance;
    std::size_t n_rows = 0;
    SurveyStats survey_stats;
    try {
        const auto rows = pipeline_features(bins, boundaries, o.min_days, o.min_online);
        const auto labels = derive_atus_labels(survey, o.min_respondents, &survey_stats);
        const auto training = join_labels(rows, labels);
        if (training.rows.empty())
            throw std::runtime_error("no labeled city-years survive the eligibility filters");
        n_rows = training.rows.size();
        ForestConfig cfg;
        cfg.n_trees = o.trees;
        cfg.seed = common.seed;
        cfg.workers = common.workers;
        const Matrix x = feature_matrix(training.rows);
        ens = train_forest(x, training.labels, cfg);
        importance = permutation_importance(ens, x, training.labels);
    } catch (const std::exception& e) {
        fail(e.what());
        return kComputeError;
    }

    try {
        std::filesystem::create_directories(o.out_dir);
        const std::string model_path =
            o.model.empty() ? o.out_dir + "/model.bin" : o.model;
        ens.save(model_path);
        CsvWriter w({"feature", "importance_pct"});
        for (std::size_t f = 0; f < importance.size(); ++f) {
            w.field(feature_names()[f]).field(importance[f]);
            w.end_row();
        }
        w.to_file(o.out_dir + "/importance.csv");

        RunManifest m;
        m.command = "sleep train";
        m.seed = common.seed;
        m.workers = common.workers;
        m.inputs = {{"bins", o.bins}, {"boundaries", o.boundaries}, {"survey", o.survey}};
        m.outputs = {model_path, o.out_dir + "/importance.csv"};
        m.diagnostics = {{"oob_accuracy", format_double(ens.oob_accuracy)},
                         {"training_rows", std::to_string(n_rows)},
                         {"discarded_respondents",
                          std::to_string(survey_stats.discarded_respondents)}};
        m.wall_ms = timer.ms();
        m.write(o.out_dir + "/sleep_train_manifest.json");
        std::fprintf(stderr, "out-of-bag accuracy: %s\n",
                     format_double(ens.oob_accuracy).c_str());
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }
    return kOk;
}

int cmd_sleep_predict(const CommonOpts& common, const SleepOpts& o) {
    Timer timer;
    std::vector<SegmentBin> bins;
    std::vector<UrbanBoundary> boundaries;
    TreeEnsemble ens;
    try {
        bins = read_bins_csv(o.bins);
        boundaries = read_boundaries(o.boundaries);
        ens = TreeEnsemble::load(o.model);
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }

    PredictOutcome outcome;
    try {
        const auto rows = pipeline_features(bins, boundaries, o.min_days, o.min_online);
        outcome = predict_sleep(ens, rows);
    } catch (const std::exception& e) {
        fail(e.what());
        return kComputeError;
    }

    try {
        std::filesystem::create_directories(o.out_dir);
        write_file(o.out_dir + "/times.csv", write_times_csv(outcome.times));
        if (outcome.times.empty())
            std::fprintf(stderr,
                         "warning: no city-year passed the quality filter; times.csv is empty\n");
        RunManifest m;
        m.command = "sleep predict";
        m.seed = common.seed;
        m.workers = common.workers;
        m.inputs = {{"bins", o.bins}, {"boundaries", o.boundaries}, {"model", o.model}};
        m.outputs = {o.out_dir + "/times.csv"};
        m.diagnostics = {{"predicted", std::to_string(outcome.times.size())},
                         {"low_confidence", std::to_string(outcome.low_confidence.size())}};
        m.wall_ms = timer.ms();
        m.write(o.out_dir + "/sleep_predict_manifest.json");
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }
    return kOk;
}

// ---------------------------------------------------------------- panel ----

struct PanelOpts {
    std::string panel, out_dir, filter = "none", sector;
    RegressionSpec spec;
    std::size_t min_rows = 10;
};

int cmd_panel(const CommonOpts& common, const PanelOpts& o) {
    Timer timer;
    std::vector<PanelObservation> panel;
    SampleFilter filter;
    try {
        panel = read_panel_csv(o.panel);
        filter = parse_filter(o.filter);
        if (!o.sector.empty()) {
            const auto valid = panel_sectors(panel);
            if (std::find(valid.begin(), valid.end(), o.sector) == valid.end()) {
                std::string names;
                for (const auto& s : valid) names += (names.empty() ? "" : ", ") + s;
                throw std::runtime_error("unknown sector '" + o.sector +
                                         "' (valid: " + names + ")");
            }
        }
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }

    FitResult fit;
    FilterReport report;
    try {
        const auto sample = apply_sample_filter(panel, filter, &report);
        fit = o.sector.empty() ? fit_fe(sample, o.spec)
                               : fit_sectoral(sample, o.sector, o.min_rows);
    } catch (const std::exception& e) {
        fail(e.what());
        return kComputeError;
    }

    try {
        std::filesystem::create_directories(o.out_dir);
        CsvWriter w({"spec", "sector", "filter", "lag", "beta", "robust_se", "r_squared",
                     "n_obs", "n_regions", "model_dof"});
        w.field(o.sector.empty() ? flag_string(o.spec) : "region+year")
            .field(o.sector.empty() ? "gdp_pc" : o.sector)
            .field(o.filter)
            .field(static_cast<std::int64_t>(o.spec.lag))
            .field(fit.beta)
            .field(fit.robust_se)
            .field(fit.r_squared)
            .field(static_cast<std::int64_t>(fit.n_obs))
            .field(static_cast<std::int64_t>(fit.n_regions))
            .field(static_cast<std::int64_t>(fit.model_dof));
        w.end_row();
        w.to_file(o.out_dir + "/fit.csv");

        RunManifest m;
        m.command = "panel";
        m.seed = common.seed;
        m.workers = common.workers;
        m.inputs = {{"panel", o.panel}};
        m.outputs = {o.out_dir + "/fit.csv"};
        m.diagnostics = {{"spec", flag_string(o.spec)},
                         {"lag", std::to_string(o.spec.lag)},
                         {"filter", o.filter},
                         {"sector", o.sector.empty() ? "gdp_pc" : o.sector},
                         {"n_before_filter", std::to_string(report.n_before)},
                         {"n_after_filter", std::to_string(report.n_after)},
                         {"n_dropped_log", std::to_string(fit.n_dropped)}};
        m.wall_ms = timer.ms();
        m.write(o.out_dir + "/panel_manifest.json");
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }
    return kOk;
}

// ----------------------------------------------------------------- plot ----

struct PlotOpts {
    std::string csv, kind = "line", column, out;
};

int cmd_plot(const CommonOpts& common, const PlotOpts& o) {
    Timer timer;
    try {
        const auto table = CsvTable::from_file(o.csv);
        const auto svg = render_plot(table, o.kind, o.column);
        write_file(o.out, svg);
        RunManifest m;
        m.command = "plot";
        m.seed = common.seed;
        m.workers = common.workers;
        m.inputs = {{"csv", o.csv}};
        m.outputs = {o.out};
        m.diagnostics = {{"kind", o.kind}};
        m.wall_ms = timer.ms();
        m.write(o.out + ".manifest.json");
    } catch (const std::exception& e) {
        fail(e.what());
        return kUsageError;
    }
    return kOk;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"city-scale internet activity pipeline"};
    app.require_subcommand(1);

    CommonOpts common;
    auto* seed_opt = app.add_option("--seed", common.seed, "run seed");
    app.add_option("--workers", common.workers, "worker threads (outputs are invariant)")
        ->check(CLI::PositiveNumber);
    app.add_option("--config", common.config, "config file (synth: world JSON)");

    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "generate a synthetic world");
    synth->fallthrough();
    synth->add_option("--out", synth_out, "output directory")->required();

    AggregateOpts agg;
    auto* aggregate = app.add_subcommand("aggregate", "scans + geolocation -> bins and counts");
    aggregate->fallthrough();
    aggregate->add_option("--scans", agg.scans)->required();
    aggregate->add_option("--geo", agg.geo)->required();
    aggregate->add_option("--boundaries", agg.boundaries)->required();
    aggregate->add_option("--out", agg.out_dir)->required();
    aggregate->add_option("--min-days", agg.min_days, "days of coverage a month needs");
    aggregate->add_option("--cutoff", agg.cutoff, "minimum monthly count per retained city");

    DiffusionOpts diff;
    auto* diffusion = app.add_subcommand("diffusion", "fit the mixed-effects adoption model");
    diffusion->fallthrough();
    diffusion->add_option("--counts", diff.counts)->required();
    diffusion->add_option("--boundaries", diff.boundaries)->required();
    diffusion->add_option("--out", diff.out_dir)->required();
    diffusion->add_option("--iterations", diff.saem.iterations);
    diffusion->add_option("--chains", diff.saem.chains);
    diffusion->add_option("--min-months", diff.saem.min_months);

    SleepOpts sleep_opts;
    auto* sleep = app.add_subcommand("sleep", "sleep timing estimation");
    sleep->require_subcommand(1);
    auto* train = sleep->add_subcommand("train", "fit the segment classifier");
    train->fallthrough();
    train->add_option("--bins", sleep_opts.bins)->required();
    train->add_option("--boundaries", sleep_opts.boundaries)->required();
    train->add_option("--survey", sleep_opts.survey)->required();
    train->add_option("--out", sleep_opts.out_dir)->required();
    train->add_option("--model", sleep_opts.model, "model path (default <out>/model.bin)");
    train->add_option("--trees", sleep_opts.trees);
    train->add_option("--min-days", sleep_opts.min_days);
    train->add_option("--min-online", sleep_opts.min_online);
    train->add_option("--min-respondents", sleep_opts.min_respondents);
    auto* predict = sleep->add_subcommand("predict", "convert scores to sleep times");
    predict->fallthrough();
    predict->add_option("--bins", sleep_opts.bins)->required();
    predict->add_option("--boundaries", sleep_opts.boundaries)->required();
    predict->add_option("--model", sleep_opts.model)->required();
    predict->add_option("--out", sleep_opts.out_dir)->required();
    predict->add_option("--min-days", sleep_opts.min_days);
    predict->add_option("--min-online", sleep_opts.min_online);

    PanelOpts pan;
    auto* panel = app.add_subcommand("panel", "fixed-effects elasticity estimates");
    panel->fallthrough();
    panel->add_option("--panel", pan.panel)->required();
    panel->add_option("--out", pan.out_dir)->required();
    panel->add_flag("--region-effects", pan.spec.region_effects);
    panel->add_flag("--year-effects", pan.spec.year_effects);
    panel->add_flag("--country-year-effects", pan.spec.country_year_effects);
    panel->add_flag("--region-trends", pan.spec.region_trends);
    panel->add_option("--lag", pan.spec.lag)->check(CLI::Range(0, 1));
    panel->add_option("--filter", pan.filter);
    panel->add_option("--sector", pan.sector);
    panel->add_option("--min-rows", pan.min_rows);

    PlotOpts plot_opts;
    auto* plot = app.add_subcommand("plot", "render a CSV as an SVG figure");
    plot->fallthrough();
    plot->add_option("--csv", plot_opts.csv)->required();
    plot->add_option("--kind", plot_opts.kind)->check(CLI::IsMember({"line", "density"}));
    plot->add_option("--column", plot_opts.column, "density column (default: last)");
    plot->add_option("--out", plot_opts.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    if (app.got_subcommand(synth)) return cmd_synth(common, seed_opt->count() > 0, synth_out);
    if (app.got_subcommand(aggregate)) return cmd_aggregate(common, agg);
    if (app.got_subcommand(diffusion)) return cmd_diffusion(common, diff);
    if (app.got_subcommand(sleep)) {
        if (sleep->got_subcommand(train)) return cmd_sleep_train(common, sleep_opts);
        return cmd_sleep_predict(common, sleep_opts);
    }
    if (app.got_subcommand(panel)) return cmd_panel(common, pan);
    if (app.got_subcommand(plot)) return cmd_plot(common, plot_opts);
    return kUsageError;
}

} // namespace netpulse
