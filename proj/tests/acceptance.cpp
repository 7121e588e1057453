// Acceptance suite: runs every release criterion end to end and prints one
// pass/fail line per criterion. Exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <twingp/twingp.hpp>

using namespace twingp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct CriterionResult {
    bool passed = false;
    std::string detail;
};

CriterionResult pass(std::string detail) { return {true, std::move(detail)}; }
CriterionResult fail(std::string detail) { return {false, std::move(detail)}; }

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) { return format_double(v); }

fs::path work_root() {
    const fs::path root = fs::temp_directory_path() / "twingp_acceptance";
    fs::create_directories(root);
    return root;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ScenarioConfig scenario(TwinCase twin_case, int n_points, double sigma, std::uint64_t seed,
                        const std::string& out_name) {
    ScenarioConfig cfg;
    cfg.twin_case = twin_case;
    cfg.profile = EvolutionProfile::for_case(twin_case);
    cfg.n_points = n_points;
    cfg.noise_sigma = sigma;
    cfg.seed = seed;
    cfg.horizon = cfg.default_horizon();
    cfg.out_dir = (work_root() / out_name).string();
    std::vector<std::string> errors;
    validate_scenario(cfg, errors);
    if (!errors.empty()) throw ConfigError("acceptance scenario invalid: " + errors.front());
    return cfg;
}

// --- criterion 1: closed-form round trips ----------------------------------

CriterionResult criterion_round_trip() {
    const auto start = Clock::now();
    double worst = 0.0;
    for (const double zeta : {0.01, 0.05, 0.2}) {
        const auto sys = NominalSystem::from_damping_ratio(1.0, 1.0, zeta);
        const double golden = 0.6180339887498949;
        for (int i = 0; i < 1000; ++i) {
            const double dk = -0.5 + 0.8 * i / 999.0;
            const double dm = -0.25 + 0.5 * std::fmod(golden * i, 1.0);

            const double w_stiff = std::sqrt(1.0 + dk - zeta * zeta);
            worst = std::max(worst, std::abs(invert_stiffness(w_stiff, sys) - dk));

            const double w_mass = std::sqrt((1.0 + dm) - zeta * zeta) / (1.0 + dm);
            worst = std::max(worst, std::abs(invert_mass(w_mass, sys) - dm));

            const double re = -zeta / (1.0 + dm);
            const double im = std::sqrt((1.0 + dk) * (1.0 + dm) - zeta * zeta) / (1.0 + dm);
            const auto joint = invert_joint(re, im, sys);
            worst = std::max(worst, std::abs(joint.delta_m - dm));
            worst = std::max(worst, std::abs(joint.delta_k - dk));
        }
    }
    const double elapsed = seconds_since(start);
    if (worst > 1e-9) return fail("max round-trip error " + fmt(worst) + " exceeds 1e-9");
    if (elapsed >= 1.0) return fail("runtime " + fmt(elapsed) + " s exceeds 1 s");
    return pass("max error " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

// --- criterion 2: clean-data stiffness twin --------------------------------

CriterionResult criterion_clean_twin() {
    const auto start = Clock::now();
    const ScenarioConfig cfg = scenario(TwinCase::stiffness, 30, 0.0, 2024, "clean_stiffness");
    fs::remove_all(cfg.out_dir);
    const RunResult run = run_scenario(cfg);
    if (run.failed) return fail("pipeline failed at " + run.failed_stage);
    const double rmse = run.channels.at(0).rmse;

    const TrainedEmulator& winner = *run.channels.at(0).selection.winner().emulator;
    const double max_latent = winner.predict(winner.train_inputs()).latent_variance.maxCoeff();
    const double elapsed = seconds_since(start);

    if (rmse > 1e-3) return fail("rmse " + fmt(rmse) + " exceeds 1e-3");
    if (max_latent > 1e-6)
        return fail("training-point latent variance " + fmt(max_latent) + " exceeds 1e-6");
    if (elapsed >= 120.0) return fail("runtime " + fmt(elapsed) + " s exceeds 120 s");
    return pass("rmse " + fmt(rmse) + ", latent variance " + fmt(max_latent) + ", winner " +
                run.channels.at(0).selection.winner().spec.name() + ", " + fmt(elapsed) + " s");
}

// --- criterion 3: noisy-data band coverage ---------------------------------

CriterionResult criterion_coverage() {
    const auto start = Clock::now();
    const double sigma = 0.015;
    const int n_points = 30;
    const std::uint64_t base_seed = 3000;

    const ScenarioConfig cfg = scenario(TwinCase::stiffness, n_points, sigma, base_seed, "cov");
    const NominalSystem sys = cfg.system();
    const auto train_grid = slow_time_grid(n_points, cfg.horizon);
    std::vector<double> heldout_grid(train_grid.size() - 1);
    for (std::size_t i = 0; i + 1 < train_grid.size(); ++i)
        heldout_grid[i] = 0.5 * (train_grid[i] + train_grid[i + 1]);

    long inside = 0, total = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto train =
            sample_measurements(train_grid, cfg.profile, sys, MeasurementKind::damped_frequency,
                                sigma, mix_seed(base_seed, 2 * rep));
        const auto deltas = invert_series(train, sys, TwinCase::stiffness);
        Eigen::MatrixXd X(n_points, 1);
        Eigen::VectorXd y(n_points);
        for (int i = 0; i < n_points; ++i) {
            X(i, 0) = deltas.slow_times[i] / sys.period0();
            y[i] = deltas.delta_k_hat[i];
        }
        FitOptions opts = cfg.fit_options();
        opts.seed = mix_seed(base_seed, 100000 + rep);
        const auto report = select_model(full_pool(), X, y, opts);
        const TrainedEmulator& winner = *report.winner().emulator;

        const auto heldout =
            sample_measurements(heldout_grid, cfg.profile, sys, MeasurementKind::damped_frequency,
                                sigma, mix_seed(base_seed, 2 * rep + 1));
        const auto heldout_deltas = invert_series(heldout, sys, TwinCase::stiffness);
        Eigen::MatrixXd Q(heldout_grid.size(), 1);
        for (std::size_t i = 0; i < heldout_grid.size(); ++i)
            Q(static_cast<Eigen::Index>(i), 0) = heldout_grid[i] / sys.period0();
        const auto pred = winner.predict(Q);
        for (std::size_t i = 0; i < heldout_grid.size(); ++i) {
            const double half =
                k95 * std::sqrt(pred.observation_variance[static_cast<Eigen::Index>(i)]);
            const double observed = heldout_deltas.delta_k_hat[i];
            const double mean = pred.mean[static_cast<Eigen::Index>(i)];
            if (observed >= mean - half && observed <= mean + half) ++inside;
            ++total;
        }
    }
    const double coverage = static_cast<double>(inside) / total;
    const double elapsed = seconds_since(start);
    if (coverage < 0.88 || coverage > 0.99)
        return fail("coverage " + fmt(coverage) + " is outside [0.88, 0.99]");
    if (elapsed >= 1800.0) return fail("runtime " + fmt(elapsed) + " s exceeds 1800 s");
    return pass("coverage " + fmt(coverage) + " over " + std::to_string(total) +
                " held-out points, " + fmt(elapsed) + " s");
}

// --- criteria 4 and 5: sampling-rate studies -------------------------------

std::map<std::string, std::vector<double>> sweep_rmse(TwinCase twin_case, int n_points,
                                                      double sigma, int n_seeds,
                                                      std::uint64_t base_seed,
                                                      const std::string& tag) {
    std::map<std::string, std::vector<double>> rmse;
    for (int rep = 0; rep < n_seeds; ++rep) {
        const ScenarioConfig cfg =
            scenario(twin_case, n_points, sigma, mix_seed(base_seed, rep),
                     tag + "_n" + std::to_string(n_points) + "_r" + std::to_string(rep));
        fs::remove_all(cfg.out_dir);
        const RunResult run = run_scenario(cfg);
        if (run.failed) throw ConfigError("sweep run failed at " + run.failed_stage);
        for (const auto& ch : run.channels) rmse[ch.label].push_back(ch.rmse);
    }
    return rmse;
}

CriterionResult criterion_mass_sampling() {
    const double sigma = 0.025;
    const double m100 = median(sweep_rmse(TwinCase::mass, 100, sigma, 10, 4000, "mass").at("mass"));
    const double m150 = median(sweep_rmse(TwinCase::mass, 150, sigma, 10, 4000, "mass").at("mass"));
    const double m200 = median(sweep_rmse(TwinCase::mass, 200, sigma, 10, 4000, "mass").at("mass"));
    const std::string detail =
        "median rmse: n100 " + fmt(m100) + ", n150 " + fmt(m150) + ", n200 " + fmt(m200);
    if (!(m200 < m100)) return fail(detail + "; n200 does not improve on n100");
    if (!(m150 <= 0.05)) return fail(detail + "; n150 exceeds 0.05");
    return pass(detail);
}

CriterionResult criterion_joint_channels() {
    const auto rmse = sweep_rmse(TwinCase::joint, 150, 0.025, 10, 5000, "joint");
    const double stiff = median(rmse.at("stiffness"));
    const double mass = median(rmse.at("mass"));
    const std::string detail = "median rmse: stiffness " + fmt(stiff) + ", mass " + fmt(mass);
    if (!(stiff <= 0.02)) return fail(detail + "; stiffness exceeds 0.02");
    if (!(mass <= 0.08)) return fail(detail + "; mass exceeds 0.08");
    return pass(detail);
}

// --- criterion 6: dense-oracle equivalence ---------------------------------

double oracle_lml(const MeanBasis& mean, const Kernel& kernel, double noise,
                  const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Eigen::MatrixXd Ky = gram_matrix(kernel, X);
    Ky.diagonal().array() += noise;
    const Eigen::MatrixXd Kinv = Ky.inverse();
    const Eigen::VectorXd r = y - mean_values(mean, X);
    return -0.5 * r.dot(Kinv * r) - 0.5 * std::log(Ky.determinant()) -
           0.5 * static_cast<double>(X.rows()) * kLogTwoPi;
}

CriterionResult criterion_gp_oracle() {
    Rng rng(6001);
    double worst = 0.0;
    for (const MeanKind mean_kind : {MeanKind::constant, MeanKind::linear, MeanKind::quadratic}) {
        for (const auto& [family, ard] : kernel_pool_order()) {
            Eigen::MatrixXd X(4, 1);
            X << -1.2, -0.1, 0.6, 1.5;
            Eigen::VectorXd y(4);
            for (int i = 0; i < 4; ++i) y[i] = rng.normal();
            Kernel kernel;
            kernel.family = family;
            kernel.ard = ard;
            kernel.signal_variance = 1.3;
            kernel.length_scales = Eigen::VectorXd::Constant(1, 0.7);
            kernel.shape = 1.4;
            MeanBasis mean{mean_kind, Eigen::VectorXd::Zero(basis_size(mean_kind, 1))};
            for (Eigen::Index b = 0; b < mean.beta.size(); ++b) mean.beta[b] = rng.normal();
            const double noise = 0.07;

            worst = std::max(worst, std::abs(log_marginal_likelihood(mean, kernel, noise, X, y) -
                                             oracle_lml(mean, kernel, noise, X, y)));

            Eigen::MatrixXd Ky = gram_matrix(kernel, X);
            Ky.diagonal().array() += noise;
            const Eigen::MatrixXd Kinv = Ky.inverse();
            const Eigen::VectorXd resid = y - mean_values(mean, X);
            Eigen::MatrixXd Q(3, 1);
            Q << -0.6, 0.2, 2.1;
            const Eigen::MatrixXd Ks = cross_gram(kernel, X, Q);
            const TrainedEmulator emulator(mean, kernel, noise, X, y, 0);
            const auto pred = emulator.predict(Q);
            for (Eigen::Index q = 0; q < Q.rows(); ++q) {
                const double mu = mean_values(mean, Q)[q] + Ks.col(q).dot(Kinv * resid);
                const double var = kernel.signal_variance - Ks.col(q).dot(Kinv * Ks.col(q));
                worst = std::max(worst, std::abs(pred.mean[q] - mu));
                worst = std::max(worst, std::abs(pred.latent_variance[q] - var));
            }
        }
    }
    if (worst > 1e-10) return fail("max |library - oracle| " + fmt(worst) + " exceeds 1e-10");

    double worst_rel = 0.0;
    const auto families = kernel_pool_order();
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd X(5, 1);
        for (int i = 0; i < 5; ++i) X(i, 0) = rng.uniform(-2.0, 2.0);
        Eigen::VectorXd y(5);
        for (int i = 0; i < 5; ++i) y[i] = rng.normal();
        Kernel kernel;
        kernel.family = families[static_cast<std::size_t>(trial) % families.size()].first;
        kernel.ard = families[static_cast<std::size_t>(trial) % families.size()].second;
        kernel.signal_variance = rng.log_uniform(0.3, 3.0);
        kernel.length_scales = Eigen::VectorXd::Constant(1, rng.log_uniform(0.3, 3.0));
        kernel.shape = rng.log_uniform(0.5, 2.0);
        const double noise = rng.log_uniform(0.02, 0.5);
        const MeanBasis mean{MeanKind::constant, Eigen::VectorXd::Constant(1, 0.2)};

        const Eigen::VectorXd grad = lml_gradient(mean, kernel, noise, X, y);
        const Eigen::VectorXd packed = pack_log_params(kernel, noise);
        const double h = 1e-5;
        for (Eigen::Index p = 0; p < packed.size(); ++p) {
            Eigen::VectorXd hi = packed, lo = packed;
            hi[p] += h;
            lo[p] -= h;
            Kernel k_hi = kernel, k_lo = kernel;
            double noise_hi = 0.0, noise_lo = 0.0;
            unpack_log_params(hi, k_hi, noise_hi);
            unpack_log_params(lo, k_lo, noise_lo);
            const double fd = (log_marginal_likelihood(mean, k_hi, noise_hi, X, y) -
                               log_marginal_likelihood(mean, k_lo, noise_lo, X, y)) /
                              (2.0 * h);
            worst_rel =
                std::max(worst_rel, std::abs(grad[p] - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    if (worst_rel > 1e-5) return fail("gradient relative error " + fmt(worst_rel) + " exceeds 1e-5");
    return pass("oracle gap " + fmt(worst) + ", gradient rel err " + fmt(worst_rel));
}

// --- criterion 7: BIC recovery ---------------------------------------------

CriterionResult criterion_bic_recovery() {
    Kernel truth;
    truth.family = KernelFamily::squared_exponential;
    truth.signal_variance = 1.0;
    truth.length_scales = Eigen::VectorXd::Constant(1, 0.3);
    const std::vector<CandidateSpec> pool = {
        {MeanKind::constant, KernelFamily::squared_exponential, false},
        {MeanKind::constant, KernelFamily::exponential, false},
    };
    const int n = 100;
    int wins = 0;
    for (int rep = 0; rep < 50; ++rep) {
        Rng rng(mix_seed(7000, rep));
        Eigen::MatrixXd X(n, 1);
        for (int i = 0; i < n; ++i) X(i, 0) = 2.0 * i / (n - 1.0);
        Eigen::MatrixXd K = gram_matrix(truth, X);
        K.diagonal().array() += 1e-10;
        const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(K).matrixL();
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = rng.normal();
        Eigen::VectorXd y = L * z;
        for (int i = 0; i < n; ++i) y[i] += 0.01 * rng.normal();

        FitOptions opts;
        opts.seed = mix_seed(7500, rep);
        const auto report = select_model(pool, X, y, opts);
        if (report.winner().spec.kernel == KernelFamily::squared_exponential) ++wins;
    }
    const double rate = wins / 50.0;
    if (rate < 0.8) return fail("recovery rate " + fmt(rate) + " is below 0.8");
    return pass("recovered the generating family in " + std::to_string(wins) +
                "/50 replications");
}

// --- criterion 8: byte determinism -----------------------------------------

CriterionResult criterion_determinism() {
    const ScenarioConfig cfg = scenario(TwinCase::stiffness, 30, 0.015, 808, "determinism");
    fs::remove_all(cfg.out_dir);
    const RunResult first = run_scenario(cfg);
    if (first.failed) return fail("first run failed at " + first.failed_stage);
    std::map<std::string, std::string> snapshot;
    for (const auto& name : first.artifacts)
        snapshot[name] = read_text_file(fs::path(cfg.out_dir) / name);

    const RunResult second = run_scenario(cfg);
    if (second.failed) return fail("second run failed at " + second.failed_stage);
    if (second.artifacts != first.artifacts) return fail("artifact inventories differ");
    for (const auto& name : second.artifacts) {
        if (read_text_file(fs::path(cfg.out_dir) / name) != snapshot.at(name))
            return fail("artifact " + name + " differs between identical runs");
    }
    return pass(std::to_string(first.artifacts.size()) + " artifacts byte-identical");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<CriterionResult()>>> criteria = {
        {"1. closed-form round trips (stiffness, mass, joint) within 1e-9", criterion_round_trip},
        {"2. clean-data stiffness twin: rmse <= 1e-3, latent variance <= 1e-6",
         criterion_clean_twin},
        {"3. noisy stiffness 95% band coverage within [88%, 99%] over 50 replications",
         criterion_coverage},
        {"4. mass sampling-rate effect: median rmse improves with n, n150 <= 0.05",
         criterion_mass_sampling},
        {"5. joint case at n=150: stiffness rmse <= 0.02, mass rmse <= 0.08",
         criterion_joint_channels},
        {"6. GP core matches dense oracles (1e-10) and finite differences (1e-5)",
         criterion_gp_oracle},
        {"7. BIC recovers the generating kernel in >= 80% of 50 replications",
         criterion_bic_recovery},
        {"8. identical config + seed reproduce byte-identical artifacts", criterion_determinism},
    };

    int failures = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = Clock::now();
        CriterionResult result;
        try {
            result = run();
        } catch (const std::exception& e) {
            result = fail(std::string("exception: ") + e.what());
        }
        std::printf("[%s] %s  (%s; %.1f s)\n", result.passed ? "PASS" : "FAIL", name.c_str(),
                    result.detail.c_str(), seconds_since(start));
        std::fflush(stdout);
        if (!result.passed) ++failures;
    }
    if (failures == 0)
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
    else
        std::printf("%d acceptance criteria FAILED\n", failures);
    return failures;
}
