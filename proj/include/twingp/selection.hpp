#pragma once

// BIC model selection over the mean-basis x kernel candidate pool: every
// candidate is fitted by maximum marginal likelihood, scored, and the lowest
// score wins. Ties break toward fewer parameters, then pool order.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <twingp/gp.hpp>
#include <twingp/kernels.hpp>
#include <twingp/mean.hpp>
#include <twingp/parallel.hpp>
#include <twingp/rng.hpp>

namespace twingp {

/// Score variant: `as_printed` is k*ln(n) - lml; `textbook` doubles the
/// likelihood term (k*ln(n) - 2*lml). Comparison switch only, default off.
enum class BicVariant { as_printed, textbook };

inline const char* to_string(BicVariant v) {
    return v == BicVariant::as_printed ? "as_printed" : "textbook";
}

inline double bic_score(int param_count, int n, double lml,
                        BicVariant variant = BicVariant::as_printed) {
    if (n < 1) throw ArgumentError("bic_score: need at least one data point");
    if (param_count < 0) throw ArgumentError("bic_score: negative parameter count");
    const double fit_term = variant == BicVariant::as_printed ? lml : 2.0 * lml;
    return param_count * std::log(static_cast<double>(n)) - fit_term;
}

struct CandidateSpec {
    MeanKind mean = MeanKind::constant;
    KernelFamily kernel = KernelFamily::squared_exponential;
    bool ard = false;

    std::string name() const {
        Kernel k;
        k.family = kernel;
        k.ard = ard;
        return display_name(mean) + " + " + k.display_name();
    }

    EmulatorSpec emulator_spec() const { return {mean, kernel, ard}; }
};

/// The full 3 x 10 pool, mean-major, kernels in the standard listing order.
inline std::vector<CandidateSpec> full_pool() {
    std::vector<CandidateSpec> pool;
    pool.reserve(30);
    for (const MeanKind mean : {MeanKind::constant, MeanKind::linear, MeanKind::quadratic})
        for (const auto& [family, ard] : kernel_pool_order())
            pool.push_back({mean, family, ard});
    return pool;
}

struct CandidateResult {
    CandidateSpec spec;
    int param_count = 0;  ///< |beta| + kernel hyperparameters + noise variance
    int n = 0;
    double lml = -std::numeric_limits<double>::infinity();
    double bic = std::numeric_limits<double>::infinity();
    double fit_wall_seconds = 0.0;  ///< in-memory only, not persisted
    std::uint64_t seed = 0;
    std::string error;  ///< empty on success
    std::optional<TrainedEmulator> emulator;

    bool ok() const { return error.empty(); }
};

struct ModelSelectionReport {
    std::vector<CandidateResult> candidates;
    std::size_t winner_index = 0;
    int n = 0;
    BicVariant variant = BicVariant::as_printed;
    std::uint64_t seed = 0;

    const CandidateResult& winner() const { return candidates.at(winner_index); }
};

/// Fits and scores every candidate in the pool. Candidate i uses the derived
/// seed mix_seed(opts.seed, i), so results do not depend on the parallelism,
/// and appending candidates to a pool leaves earlier records unchanged.
/// Candidates whose fit throws are recorded with an infinite score; only a
/// fully failed pool raises SelectionFailedError.
inline ModelSelectionReport select_model(const std::vector<CandidateSpec>& pool,
                                         const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                         const FitOptions& opts = {},
                                         BicVariant variant = BicVariant::as_printed) {
    if (pool.empty()) throw ArgumentError("select_model: empty candidate pool");

    ModelSelectionReport report;
    report.candidates.resize(pool.size());
    report.n = static_cast<int>(y.size());
    report.variant = variant;
    report.seed = opts.seed;

    parallel_for(pool.size(), opts.jobs, [&](std::size_t i) {
        CandidateResult& rec = report.candidates[i];
        rec.spec = pool[i];
        rec.n = static_cast<int>(y.size());
        rec.seed = mix_seed(opts.seed, i);
        FitOptions candidate_opts = opts;
        candidate_opts.seed = rec.seed;
        candidate_opts.jobs = 1;  // parallelism lives at the candidate level
        const auto started = std::chrono::steady_clock::now();
        try {
            TrainedEmulator emulator = fit(pool[i].emulator_spec(), X, y, candidate_opts);
            rec.param_count = static_cast<int>(emulator.mean().beta.size()) +
                              emulator.kernel().n_params() + 1;
            rec.lml = emulator.log_marginal();
            rec.bic = bic_score(rec.param_count, rec.n, rec.lml, variant);
            rec.emulator.emplace(std::move(emulator));
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        rec.fit_wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    });

    bool any_ok = false;
    for (std::size_t i = 0; i < report.candidates.size(); ++i) {
        const CandidateResult& rec = report.candidates[i];
        if (!rec.ok()) continue;
        if (!any_ok) {
            report.winner_index = i;
            any_ok = true;
            continue;
        }
        const CandidateResult& best = report.candidates[report.winner_index];
        if (rec.bic < best.bic ||
            (rec.bic == best.bic && rec.param_count < best.param_count))
            report.winner_index = i;
    }
    if (!any_ok) throw SelectionFailedError("every candidate fit failed");
    return report;
}

}  // namespace twingp
