// Command-line harness for the twingp pipeline: simulate a measurement
// series, invert it to delta estimates, fit/select emulators, run the full
// scenario or a sweep, validate configurations, and regenerate reports.
//
// Exit codes: 0 success, 2 validation failure, 3 pipeline failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <twingp/twingp.hpp>

namespace fs = std::filesystem;
using namespace twingp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitPipeline = 3;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> case_name;
    std::optional<int> points;
    std::optional<double> sigma;
    std::optional<int> jobs;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "configuration file (key = value, [sections])");
    cmd->add_option("--seed", flags.seed, "seed override");
    cmd->add_option("--out", flags.out, "output directory override");
    cmd->add_option("--case", flags.case_name, "twin case override (stiffness|mass|joint)");
    cmd->add_option("--points", flags.points, "sample count override");
    cmd->add_option("--sigma", flags.sigma, "noise sigma override");
    cmd->add_option("--jobs", flags.jobs, "worker threads for candidate fits");
}

/// Loads + validates the configuration with flag overrides applied. Prints
/// every violation on failure.
std::optional<ScenarioConfig> load_config(const CommonFlags& flags) {
    std::string text;
    if (!flags.config_path.empty()) {
        try {
            text = read_text_file(flags.config_path);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return std::nullopt;
        }
    }
    std::vector<std::pair<std::string, std::string>> overrides;
    if (flags.case_name) overrides.emplace_back("case", *flags.case_name);
    if (flags.seed) overrides.emplace_back("seed", format_uint64(*flags.seed));
    if (flags.out) overrides.emplace_back("out", *flags.out);
    if (flags.points) overrides.emplace_back("sampling.n_points", format_int(*flags.points));
    if (flags.sigma) overrides.emplace_back("sampling.sigma", format_double(*flags.sigma));
    if (flags.jobs) overrides.emplace_back("selection.jobs", format_int(*flags.jobs));

    ValidationResult result = resolve_config(text, overrides);
    if (!result.ok()) {
        std::cerr << "configuration is invalid:\n";
        for (const auto& e : result.errors) std::cerr << "  - " << e << "\n";
        return std::nullopt;
    }
    return result.config;
}

TwinCase infer_case(const MeasurementDocument& doc) {
    if (doc.series.kind == MeasurementKind::complex_eigenvalue) return TwinCase::joint;
    if (doc.profile.stiffness_evolves && !doc.profile.mass_evolves) return TwinCase::stiffness;
    if (doc.profile.mass_evolves && !doc.profile.stiffness_evolves) return TwinCase::mass;
    throw ArgumentError("cannot infer the twin case from the measurement file; pass --case");
}

Eigen::MatrixXd normalized_inputs(const std::vector<double>& slow_times, double period0) {
    Eigen::MatrixXd X(slow_times.size(), 1);
    for (std::size_t i = 0; i < slow_times.size(); ++i)
        X(static_cast<Eigen::Index>(i), 0) = slow_times[i] / period0;
    return X;
}

struct ChannelData {
    std::string label;
    Eigen::VectorXd y;
};

std::vector<ChannelData> channel_targets(const DeltaDocument& doc) {
    std::vector<ChannelData> out;
    const auto take = [](const std::vector<double>& v) {
        Eigen::VectorXd y(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) y[static_cast<Eigen::Index>(i)] = v[i];
        return y;
    };
    if (!doc.deltas.delta_m_hat.empty()) out.push_back({"mass", take(doc.deltas.delta_m_hat)});
    if (!doc.deltas.delta_k_hat.empty())
        out.push_back({"stiffness", take(doc.deltas.delta_k_hat)});
    return out;
}

int cmd_validate(const CommonFlags& flags) {
    const auto cfg = load_config(flags);
    if (!cfg) return kExitValidation;
    std::cout << config_to_text(*cfg);
    return kExitOk;
}

int cmd_simulate(const CommonFlags& flags) {
    const auto cfg = load_config(flags);
    if (!cfg) return kExitValidation;
    try {
        const NominalSystem sys = cfg->system();
        const auto grid = slow_time_grid(cfg->n_points, cfg->horizon);
        const auto series =
            sample_measurements(grid, cfg->profile, sys, measurement_kind_for(cfg->twin_case),
                                cfg->noise_sigma, mix_seed(cfg->seed, kMeasurementStream));
        fs::create_directories(cfg->out_dir);
        write_text_file(fs::path(cfg->out_dir) / "config.resolved.cfg", config_to_text(*cfg));
        write_text_file(fs::path(cfg->out_dir) / "measurements.json",
                        json_to_string(measurements_to_json(series, cfg->profile, sys)));
        write_text_file(fs::path(cfg->out_dir) / "measurements.csv",
                        measurements_to_csv(series, sys.period0()));
        std::cout << "wrote " << (fs::path(cfg->out_dir) / "measurements.json").string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "simulate failed: " << e.what() << "\n";
        return kExitPipeline;
    }
}

int cmd_invert(const CommonFlags& flags, const std::string& input) {
    try {
        const auto doc = measurements_from_json(Json::parse(read_text_file(input)));
        const TwinCase twin_case =
            flags.case_name ? twin_case_from_string(*flags.case_name) : infer_case(doc);
        const auto deltas = invert_series(doc.series, doc.system, twin_case);
        const fs::path out_dir = flags.out ? fs::path(*flags.out) : fs::path(input).parent_path();
        fs::create_directories(out_dir);
        write_text_file(out_dir / "deltas.json",
                        json_to_string(deltas_to_json(deltas, doc.system, twin_case, input)));
        write_text_file(out_dir / "deltas.csv", deltas_to_csv(deltas, doc.system.period0()));
        std::cout << "wrote " << (out_dir / "deltas.json").string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "invert failed: " << e.what() << "\n";
        return kExitPipeline;
    }
}

FitOptions options_from_flags(const CommonFlags& flags) {
    FitOptions opts;
    if (flags.seed) opts.seed = *flags.seed;
    if (flags.jobs && *flags.jobs > 0) opts.jobs = static_cast<unsigned>(*flags.jobs);
    return opts;
}

int cmd_fit(const CommonFlags& flags, const std::string& input, const std::string& mean_name,
            const std::string& kernel_name, bool ard, const std::string& channel) {
    try {
        const auto doc = deltas_from_json(Json::parse(read_text_file(input)));
        auto channels = channel_targets(doc);
        if (!channel.empty())
            std::erase_if(channels, [&](const ChannelData& c) { return c.label != channel; });
        if (channels.empty()) throw ArgumentError("no matching delta channel in " + input);
        const Eigen::MatrixXd X =
            normalized_inputs(doc.deltas.slow_times, doc.system.period0());
        const EmulatorSpec spec{mean_kind_from_string(mean_name),
                                kernel_family_from_string(kernel_name), ard};
        const fs::path out_dir = flags.out ? fs::path(*flags.out) : fs::path(input).parent_path();
        fs::create_directories(out_dir);
        for (const auto& ch : channels) {
            const TrainedEmulator emulator = fit(spec, X, ch.y, options_from_flags(flags));
            const fs::path path = out_dir / ("emulator_" + ch.label + ".json");
            write_text_file(path, json_to_string(emulator_to_json(emulator)));
            std::cout << ch.label << ": lml = " << format_double(emulator.log_marginal())
                      << ", wrote " << path.string() << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "fit failed: " << e.what() << "\n";
        return kExitPipeline;
    }
}

int cmd_select(const CommonFlags& flags, const std::string& input) {
    try {
        const auto doc = deltas_from_json(Json::parse(read_text_file(input)));
        const auto channels = channel_targets(doc);
        if (channels.empty()) throw ArgumentError("no delta channels in " + input);
        const Eigen::MatrixXd X =
            normalized_inputs(doc.deltas.slow_times, doc.system.period0());
        const fs::path out_dir = flags.out ? fs::path(*flags.out) : fs::path(input).parent_path();
        fs::create_directories(out_dir);
        for (std::size_t c = 0; c < channels.size(); ++c) {
            FitOptions opts = options_from_flags(flags);
            opts.seed = mix_seed(opts.seed, kChannelStreamBase + c);
            const auto report = select_model(full_pool(), X, channels[c].y, opts);
            write_text_file(out_dir / ("selection_" + channels[c].label + ".json"),
                            json_to_string(report_to_json(report)));
            write_text_file(out_dir / ("selection_" + channels[c].label + ".txt"),
                            report_to_text(report));
            write_text_file(out_dir / ("emulator_" + channels[c].label + ".json"),
                            json_to_string(emulator_to_json(*report.winner().emulator)));
            double seconds = 0.0;
            for (const auto& rec : report.candidates) seconds += rec.fit_wall_seconds;
            std::cout << channels[c].label << ": winner " << report.winner().spec.name()
                      << " (bic = " << format_double(report.winner().bic) << ", "
                      << format_double(seconds) << " s)\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "select failed: " << e.what() << "\n";
        return kExitPipeline;
    }
}

int cmd_run(const CommonFlags& flags) {
    const auto cfg = load_config(flags);
    if (!cfg) return kExitValidation;
    try {
        const RunResult result = run_scenario(*cfg);
        if (result.failed) {
            std::cerr << "run FAILED at " << result.failed_stage << "\n";
            std::cerr << "partial artifacts in " << result.dir.string() << "\n";
            return kExitPipeline;
        }
        for (const auto& ch : result.channels) {
            std::cout << ch.label << ": winner " << ch.selection.winner().spec.name()
                      << ", rmse = " << format_double(ch.rmse);
            if (ch.coverage) std::cout << ", coverage95 = " << format_double(*ch.coverage);
            std::cout << "\n";
        }
        std::cout << "artifacts in " << result.dir.string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return kExitPipeline;
    }
}

int cmd_matrix(const CommonFlags& flags) {
    const auto cfg = load_config(flags);
    if (!cfg) return kExitValidation;
    if (cfg->matrix_points.empty() || cfg->matrix_sigmas.empty()) {
        std::cerr << "configuration is invalid:\n  - matrix.points and matrix.sigmas must be "
                     "nonempty for the matrix command\n";
        return kExitValidation;
    }
    try {
        const MatrixSummary summary = run_matrix(*cfg, cfg->matrix_points, cfg->matrix_sigmas);
        std::size_t failed = 0;
        for (const auto& cell : summary.cells)
            if (cell.failed) ++failed;
        std::cout << summary.cells.size() << " cells, " << failed << " failed; summary.csv in "
                  << cfg->out_dir << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "matrix failed: " << e.what() << "\n";
        return kExitPipeline;
    }
}

int cmd_report(const std::string& run_dir) {
    try {
        const Json run = Json::parse(read_text_file(fs::path(run_dir) / "run.json"));
        const std::string md = emit_report_markdown(run);
        write_text_file(fs::path(run_dir) / "report.md", md);
        std::cout << md;
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "report failed: " << e.what() << "\n";
        return kExitPipeline;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-process digital twin of a damped SDOF oscillator"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string input, mean_name = "constant", kernel_name = "squared_exponential";
    std::string channel, run_dir;
    bool ard = false;

    auto* validate = app.add_subcommand("validate", "validate a configuration and echo it resolved");
    add_common_flags(validate, flags);

    auto* simulate = app.add_subcommand("simulate", "write a (noisy) measurement series");
    add_common_flags(simulate, flags);

    auto* invert = app.add_subcommand("invert", "invert measurements into delta estimates");
    add_common_flags(invert, flags);
    invert->add_option("--in", input, "measurements.json")->required();

    auto* fit_cmd = app.add_subcommand("fit", "fit one emulator spec to a delta series");
    add_common_flags(fit_cmd, flags);
    fit_cmd->add_option("--in", input, "deltas.json")->required();
    fit_cmd->add_option("--mean", mean_name, "constant|linear|quadratic");
    fit_cmd->add_option("--kernel", kernel_name,
                        "exponential|squared_exponential|matern32|matern52|rational_quadratic");
    fit_cmd->add_flag("--ard", ard, "use the ARD variant");
    fit_cmd->add_option("--channel", channel, "mass|stiffness (default: all present)");

    auto* select = app.add_subcommand("select", "BIC selection over the full candidate pool");
    add_common_flags(select, flags);
    select->add_option("--in", input, "deltas.json")->required();

    auto* run = app.add_subcommand("run", "full pipeline: simulate, invert, select, predict");
    add_common_flags(run, flags);

    auto* matrix = app.add_subcommand("matrix", "sweep over [matrix] points x sigmas");
    add_common_flags(matrix, flags);

    auto* report = app.add_subcommand("report", "regenerate report.md from a run directory");
    report->add_option("--run", run_dir, "run directory containing run.json")->required();

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return cmd_validate(flags);
    if (simulate->parsed()) return cmd_simulate(flags);
    if (invert->parsed()) return cmd_invert(flags, input);
    if (fit_cmd->parsed()) return cmd_fit(flags, input, mean_name, kernel_name, ard, channel);
    if (select->parsed()) return cmd_select(flags, input);
    if (run->parsed()) return cmd_run(flags);
    if (matrix->parsed()) return cmd_matrix(flags);
    if (report->parsed()) return cmd_report(run_dir);
    return kExitOk;
}
