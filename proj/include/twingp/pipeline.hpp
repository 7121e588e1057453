#pragma once

// End-to-end scenario pipeline: simulate -> invert -> select -> predict,
// with every artifact written to the run directory. Artifacts are fully
// determined by (config, seed); nothing time- or machine-dependent is
// persisted. A failed stage leaves partial artifacts plus a FAILED marker.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <twingp/config.hpp>
#include <twingp/dynamics.hpp>
#include <twingp/format.hpp>
#include <twingp/gp.hpp>
#include <twingp/inversion.hpp>
#include <twingp/io.hpp>
#include <twingp/selection.hpp>

namespace twingp {

// Fixed substream ids, so that artifacts name the seeds they used.
inline constexpr std::uint64_t kMeasurementStream = 1;
inline constexpr std::uint64_t kChannelStreamBase = 2;

struct ChannelResult {
    std::string label;  ///< "stiffness" or "mass"
    ModelSelectionReport selection;
    double rmse = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> coverage;  ///< empty for clean data (sigma = 0)
};

struct RunResult {
    ScenarioConfig config;
    std::filesystem::path dir;
    bool failed = false;
    std::string failed_stage;
    std::vector<std::string> artifacts;  ///< relative paths, in write order
    std::vector<ChannelResult> channels;
    Json run_json;
};

namespace detail {

struct ChannelPlan {
    std::string label;
    bool is_mass = false;
};

inline std::vector<ChannelPlan> channels_for(TwinCase c) {
    switch (c) {
        case TwinCase::stiffness: return {{"stiffness", false}};
        case TwinCase::mass: return {{"mass", true}};
        case TwinCase::joint: return {{"mass", true}, {"stiffness", false}};
    }
    throw ArgumentError("unknown twin case");
}

struct PredictionTable {
    std::vector<double> slow_times;
    std::vector<double> truth;
    std::vector<double> posterior_mean;
    std::vector<double> lower95;
    std::vector<double> upper95;
    std::vector<bool> extrapolated;
};

/// Dense evaluation grid over [0, horizon] continued by the configured
/// extrapolation fraction at the same spacing.
inline std::vector<double> dense_grid(const ScenarioConfig& cfg, std::vector<bool>& extrapolated) {
    const int n_base = cfg.grid_points;
    const double step = cfg.horizon / (n_base - 1);
    const int n_extra = static_cast<int>(std::ceil(cfg.extrapolation * (n_base - 1)));
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n_base + n_extra));
    extrapolated.clear();
    for (int i = 0; i < n_base + n_extra; ++i) {
        grid.push_back(i * step);
        extrapolated.push_back(i >= n_base);
    }
    return grid;
}

inline PredictionTable predict_channel(const ScenarioConfig& cfg, const NominalSystem& sys,
                                       const TrainedEmulator& emulator, bool is_mass) {
    PredictionTable table;
    std::vector<bool> extrapolated;
    table.slow_times = dense_grid(cfg, extrapolated);
    table.extrapolated = std::move(extrapolated);

    Eigen::MatrixXd Q(table.slow_times.size(), 1);
    for (std::size_t i = 0; i < table.slow_times.size(); ++i)
        Q(static_cast<Eigen::Index>(i), 0) = table.slow_times[i] / sys.period0();
    const PredictResult pred = emulator.predict(Q);

    table.truth.reserve(table.slow_times.size());
    for (const double t : table.slow_times)
        table.truth.push_back(is_mass ? delta_m_true(t, cfg.profile)
                                      : delta_k_true(t, cfg.profile));
    table.posterior_mean.assign(pred.mean.begin(), pred.mean.end());
    table.lower95.resize(table.slow_times.size());
    table.upper95.resize(table.slow_times.size());
    for (std::size_t i = 0; i < table.slow_times.size(); ++i) {
        const double half =
            k95 * std::sqrt(pred.observation_variance[static_cast<Eigen::Index>(i)]);
        table.lower95[i] = table.posterior_mean[i] - half;
        table.upper95[i] = table.posterior_mean[i] + half;
    }
    return table;
}

inline std::string prediction_to_csv(const PredictionTable& table, double period0) {
    CsvTable csv;
    csv.header = {"t_s_over_T0", "true_delta", "posterior_mean", "lower95", "upper95",
                  "extrapolated"};
    for (std::size_t i = 0; i < table.slow_times.size(); ++i) {
        csv.rows.push_back({format_double(table.slow_times[i] / period0),
                            format_double(table.truth[i]),
                            format_double(table.posterior_mean[i]),
                            format_double(table.lower95[i]), format_double(table.upper95[i]),
                            table.extrapolated[i] ? "1" : "0"});
    }
    return csv.to_string();
}

/// Root-mean-square error of the posterior mean against the true deltas over
/// the training range (extrapolation rows excluded).
inline double table_rmse(const PredictionTable& table) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < table.slow_times.size(); ++i) {
        if (table.extrapolated[i]) continue;
        const double err = table.posterior_mean[i] - table.truth[i];
        sum += err * err;
        ++count;
    }
    return std::sqrt(sum / count);
}

inline double table_coverage(const PredictionTable& table) {
    int inside = 0, count = 0;
    for (std::size_t i = 0; i < table.slow_times.size(); ++i) {
        if (table.extrapolated[i]) continue;
        ++count;
        if (table.truth[i] >= table.lower95[i] && table.truth[i] <= table.upper95[i]) ++inside;
    }
    return static_cast<double>(inside) / count;
}

}  // namespace detail

/// Markdown report rendered from a run.json document. Regenerable from disk;
/// contains no timestamps, so equal runs produce equal reports.
inline std::string emit_report_markdown(const Json& run) {
    std::string md = "# twingp run report\n\n";
    md += "- case: " + run.at("case").get<std::string>() + "\n";
    md += "- status: " + run.at("status").get<std::string>() + "\n";
    if (run.at("status").get<std::string>() == "failed")
        md += "- FAILED stage: " + run.at("failed_stage").get<std::string>() + "\n";
    md += "- seed: " + format_uint64(run.at("seed").get<std::uint64_t>()) +
          "\n\n";
    md += "## Configuration\n\n```\n" + run.at("config_text").get<std::string>() + "```\n\n";
    if (run.contains("channels") && !run.at("channels").empty()) {
        md += "## Channels\n\n";
        for (const auto& ch : run.at("channels")) {
            md += "### " + ch.at("label").get<std::string>() + "\n\n";
            md += "- winner: " + ch.at("winner").get<std::string>() + "\n";
            md += "- param_count: " + format_int(ch.at("param_count").get<int>()) + "\n";
            md += "- log_marginal_likelihood: " + format_double(ch.at("lml").get<double>()) + "\n";
            md += "- bic: " + format_double(ch.at("bic").get<double>()) + "\n";
            md += "- fitted: beta = [";
            bool first = true;
            for (const auto& b : ch.at("beta")) {
                if (!first) md += ", ";
                md += format_double(b.get<double>());
                first = false;
            }
            md += "], ";
            md += "signal_variance = " + format_double(ch.at("signal_variance").get<double>());
            md += ", length_scales = [";
            first = true;
            for (const auto& l : ch.at("length_scales")) {
                if (!first) md += ", ";
                md += format_double(l.get<double>());
                first = false;
            }
            md += "]";
            if (ch.contains("shape")) md += ", shape = " + format_double(ch.at("shape").get<double>());
            md += ", noise_variance = " + format_double(ch.at("noise_variance").get<double>()) + "\n";
            md += "- rmse_vs_truth: " + format_double(ch.at("rmse").get<double>()) + "\n";
            md += std::string("- coverage95: ") +
                  (ch.at("coverage").is_null() ? "n/a"
                                               : format_double(ch.at("coverage").get<double>())) +
                  "\n\n";
        }
    }
    md += "## Artifacts\n\n";
    for (const auto& f : run.at("artifacts")) md += "- " + f.get<std::string>() + "\n";
    return md;
}

/// Runs the full pipeline for one resolved configuration, writing artifacts
/// under cfg.out_dir. Stage errors do not throw; they mark the run failed,
/// name the stage, and leave a FAILED marker next to the partial artifacts.
inline RunResult run_scenario(const ScenarioConfig& cfg) {
    namespace fs = std::filesystem;
    RunResult result;
    result.config = cfg;
    result.dir = fs::path(cfg.out_dir);
    fs::create_directories(result.dir);

    const auto save = [&](const std::string& name, const std::string& content) {
        write_text_file(result.dir / name, content);
        result.artifacts.push_back(name);
    };

    const std::string config_text = config_to_text(cfg);
    save("config.resolved.cfg", config_text);

    const NominalSystem sys = cfg.system();
    const MeasurementKind kind = measurement_kind_for(cfg.twin_case);
    MeasurementSeries series;
    DeltaEstimateSeries deltas;

    const auto fail = [&](const std::string& stage, const std::exception& e) {
        result.failed = true;
        result.failed_stage = stage + ": " + e.what();
    };

    try {
        const auto grid = slow_time_grid(cfg.n_points, cfg.horizon);
        series = sample_measurements(grid, cfg.profile, sys, kind, cfg.noise_sigma,
                                     mix_seed(cfg.seed, kMeasurementStream));
        save("measurements.json",
             json_to_string(measurements_to_json(series, cfg.profile, sys)));
        save("measurements.csv", measurements_to_csv(series, sys.period0()));
    } catch (const std::exception& e) {
        fail("simulate", e);
    }

    if (!result.failed) {
        try {
            deltas = invert_series(series, sys, cfg.twin_case);
            save("deltas.json",
                 json_to_string(deltas_to_json(deltas, sys, cfg.twin_case, "measurements.json")));
            save("deltas.csv", deltas_to_csv(deltas, sys.period0()));
        } catch (const std::exception& e) {
            fail("invert", e);
        }
    }

    if (!result.failed) {
        const auto plans = detail::channels_for(cfg.twin_case);
        for (std::size_t c = 0; c < plans.size() && !result.failed; ++c) {
            const auto& plan = plans[c];
            const std::vector<double>& targets =
                plan.is_mass ? deltas.delta_m_hat : deltas.delta_k_hat;
            Eigen::MatrixXd X(targets.size(), 1);
            Eigen::VectorXd y(targets.size());
            for (std::size_t i = 0; i < targets.size(); ++i) {
                X(static_cast<Eigen::Index>(i), 0) = deltas.slow_times[i] / sys.period0();
                y[static_cast<Eigen::Index>(i)] = targets[i];
            }

            ChannelResult channel;
            channel.label = plan.label;
            try {
                FitOptions fit_opts = cfg.fit_options();
                fit_opts.seed = mix_seed(cfg.seed, kChannelStreamBase + c);
                channel.selection =
                    select_model(cfg.pool(), X, y, fit_opts, cfg.bic_variant());
                save("selection_" + plan.label + ".json",
                     json_to_string(report_to_json(channel.selection)));
                save("selection_" + plan.label + ".txt", report_to_text(channel.selection));
                save("emulator_" + plan.label + ".json",
                     json_to_string(emulator_to_json(*channel.selection.winner().emulator)));
            } catch (const std::exception& e) {
                fail("select", e);
                break;
            }

            try {
                const auto table = detail::predict_channel(
                    cfg, sys, *channel.selection.winner().emulator, plan.is_mass);
                save("prediction_" + plan.label + ".csv",
                     detail::prediction_to_csv(table, sys.period0()));
                channel.rmse = detail::table_rmse(table);
                if (cfg.noise_sigma > 0.0) channel.coverage = detail::table_coverage(table);
            } catch (const std::exception& e) {
                fail("predict", e);
                break;
            }
            result.channels.push_back(std::move(channel));
        }
    }

    // run.json summarizes the run for reports and sweeps.
    Json run{{"schema", "twingp.run/1"},
             {"case", to_string(cfg.twin_case)},
             {"status", result.failed ? "failed" : "ok"},
             {"failed_stage", result.failed_stage},
             {"seed", cfg.seed},
             {"config_text", config_text}};
    Json channels = Json::array();
    for (const auto& ch : result.channels) {
        const auto& win = ch.selection.winner();
        const TrainedEmulator& e = *win.emulator;
        Json j{{"label", ch.label},
               {"winner", win.spec.name()},
               {"param_count", win.param_count},
               {"lml", win.lml},
               {"bic", win.bic},
               {"beta", to_json(e.mean().beta)},
               {"signal_variance", e.kernel().signal_variance},
               {"length_scales", to_json(e.kernel().length_scales)},
               {"noise_variance", e.noise_variance()},
               {"rmse", ch.rmse}};
        if (e.kernel().family == KernelFamily::rational_quadratic)
            j["shape"] = e.kernel().shape;
        j["coverage"] = ch.coverage ? Json(*ch.coverage) : Json(nullptr);
        channels.push_back(std::move(j));
    }
    run["channels"] = std::move(channels);
    Json artifact_list = Json::array();
    for (const auto& a : result.artifacts) artifact_list.push_back(a);
    artifact_list.push_back("run.json");
    artifact_list.push_back("report.md");
    run["artifacts"] = std::move(artifact_list);

    write_text_file(result.dir / "run.json", json_to_string(run));
    result.artifacts.push_back("run.json");
    write_text_file(result.dir / "report.md", emit_report_markdown(run));
    result.artifacts.push_back("report.md");
    if (result.failed) {
        write_text_file(result.dir / "FAILED", result.failed_stage + "\n");
        result.artifacts.push_back("FAILED");
    }
    result.run_json = std::move(run);
    return result;
}

struct MatrixCell {
    int n_points = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string rel_dir;
    bool failed = false;
    std::string failed_stage;
    std::vector<ChannelResult> channels;
};

struct MatrixSummary {
    std::vector<MatrixCell> cells;
    std::string csv;
};

/// Cross-product sweep over sample counts and noise levels. Each cell is one
/// seeded scenario run in its own subdirectory; cell failures are recorded
/// and the sweep continues. Writes summary.csv under the base out directory.
inline MatrixSummary run_matrix(const ScenarioConfig& base, const std::vector<int>& points_axis,
                                const std::vector<double>& sigma_axis) {
    if (points_axis.empty() || sigma_axis.empty())
        throw ArgumentError("run_matrix: both axes must be nonempty");
    namespace fs = std::filesystem;

    MatrixSummary summary;
    CsvTable csv;
    csv.header = {"case", "n_points", "sigma", "seed", "channel", "rmse", "coverage", "status"};

    std::size_t index = 0;
    for (const int n_points : points_axis) {
        for (const double sigma : sigma_axis) {
            MatrixCell cell;
            cell.n_points = n_points;
            cell.sigma = sigma;
            cell.seed = mix_seed(base.seed, index);
            cell.rel_dir = "cells/n" + format_int(n_points) + "_sigma" + format_double(sigma);
            ScenarioConfig cfg = base;
            cfg.n_points = n_points;
            cfg.noise_sigma = sigma;
            cfg.seed = cell.seed;
            cfg.out_dir = (fs::path(base.out_dir) / cell.rel_dir).string();

            std::vector<std::string> cell_errors;
            validate_scenario(cfg, cell_errors);
            if (!cell_errors.empty()) {
                cell.failed = true;
                cell.failed_stage = "validate: " + cell_errors.front();
            } else {
                try {
                    RunResult run = run_scenario(cfg);
                    cell.failed = run.failed;
                    cell.failed_stage = run.failed_stage;
                    cell.channels = std::move(run.channels);
                } catch (const std::exception& e) {
                    cell.failed = true;
                    cell.failed_stage = std::string("run: ") + e.what();
                }
            }

            if (cell.failed) {
                csv.rows.push_back({to_string(base.twin_case), format_int(n_points),
                                    format_double(sigma),
                                    format_uint64(cell.seed), "", "", "",
                                    "failed:" + cell.failed_stage});
            } else {
                for (const auto& ch : cell.channels) {
                    csv.rows.push_back({to_string(base.twin_case), format_int(n_points),
                                        format_double(sigma),
                                        format_uint64(cell.seed),
                                        ch.label, format_double(ch.rmse),
                                        ch.coverage ? format_double(*ch.coverage) : "na", "ok"});
                }
            }
            summary.cells.push_back(std::move(cell));
            ++index;
        }
    }
    fs::create_directories(base.out_dir);
    summary.csv = csv.to_string();
    write_text_file(fs::path(base.out_dir) / "summary.csv", summary.csv);
    return summary;
}

}  // namespace twingp
