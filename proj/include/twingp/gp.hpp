#pragma once

// Gaussian-process regression core: exact inference through a Cholesky
// factorization of K + sigma_n^2 I (never an explicit inverse), log marginal
// likelihood with analytic gradients in log-hyperparameter space, and
// maximum-likelihood fitting via multi-start quasi-Newton optimization with
// the mean coefficients profiled out by generalized least squares.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <twingp/errors.hpp>
#include <twingp/kernels.hpp>
#include <twingp/lbfgs.hpp>
#include <twingp/mean.hpp>
#include <twingp/parallel.hpp>
#include <twingp/rng.hpp>

namespace twingp {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

namespace detail {

struct CholeskyFactor {
    Eigen::MatrixXd L;
    double jitter = 0.0;
};

/// Factorizes K + noise_variance * I. If that fails, a diagonal jitter of
/// 1e-10 * trace(K)/n is added and escalated tenfold up to 1e-4 * trace(K)/n.
inline CholeskyFactor factorize(const Eigen::MatrixXd& K, double noise_variance) {
    const Eigen::Index n = K.rows();
    Eigen::MatrixXd Ky = K;
    Ky.diagonal().array() += noise_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(Ky);
    if (llt.info() == Eigen::Success) return {Eigen::MatrixXd(llt.matrixL()), 0.0};
    const double scale =
        std::max(K.trace() / static_cast<double>(n), std::numeric_limits<double>::min());
    for (double jitter = 1e-10 * scale; jitter <= 1.0000001e-4 * scale; jitter *= 10.0) {
        Eigen::MatrixXd jittered = Ky;
        jittered.diagonal().array() += jitter;
        llt.compute(jittered);
        if (llt.info() == Eigen::Success) return {Eigen::MatrixXd(llt.matrixL()), jitter};
    }
    throw NotPositiveDefiniteError("covariance not positive definite after maximum jitter");
}

inline void check_data(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() < 1) throw ArgumentError("need at least one training point");
    if (X.rows() != y.size()) throw ArgumentError("inputs and targets disagree in length");
    if (!y.allFinite() || !X.allFinite()) throw ArgumentError("training data must be finite");
}

}  // namespace detail

/// log N(y | mu(X), K + sigma_n^2 I) at fixed mean coefficients.
inline double log_marginal_likelihood(const MeanBasis& mean, const Kernel& kernel,
                                      double noise_variance, const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y) {
    detail::check_data(X, y);
    if (!(noise_variance >= 0.0)) throw ArgumentError("noise variance must be nonnegative");
    const auto chol = detail::factorize(gram_matrix(kernel, X), noise_variance);
    const Eigen::VectorXd resid = y - mean_values(mean, X);
    const Eigen::VectorXd white = chol.L.triangularView<Eigen::Lower>().solve(resid);
    return -0.5 * white.squaredNorm() - chol.L.diagonal().array().log().sum() -
           0.5 * static_cast<double>(X.rows()) * kLogTwoPi;
}

/// Gradient of the log marginal likelihood with respect to the
/// log-hyperparameters, ordered [log sf2, log l.., (log shape), log sn2],
/// via the trace identity 0.5 * tr((aa' - Ky^-1) dK).
inline Eigen::VectorXd lml_gradient(const MeanBasis& mean, const Kernel& kernel,
                                    double noise_variance, const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& y) {
    detail::check_data(X, y);
    if (!(noise_variance >= 0.0)) throw ArgumentError("noise variance must be nonnegative");
    const Eigen::Index n = X.rows();
    const auto chol = detail::factorize(gram_matrix(kernel, X), noise_variance);
    const auto lower = chol.L.triangularView<Eigen::Lower>();
    const Eigen::VectorXd resid = y - mean_values(mean, X);
    const Eigen::VectorXd white = lower.solve(resid);
    const Eigen::VectorXd alpha = chol.L.transpose().triangularView<Eigen::Upper>().solve(white);
    Eigen::MatrixXd Kinv = Eigen::MatrixXd::Identity(n, n);
    lower.solveInPlace(Kinv);
    chol.L.transpose().triangularView<Eigen::Upper>().solveInPlace(Kinv);
    const Eigen::MatrixXd W = alpha * alpha.transpose() - Kinv;

    const auto dK = gram_gradients(kernel, X);
    Eigen::VectorXd grad(kernel.n_params() + 1);
    for (std::size_t j = 0; j < dK.size(); ++j)
        grad[static_cast<Eigen::Index>(j)] = 0.5 * W.cwiseProduct(dK[j]).sum();
    grad[grad.size() - 1] = 0.5 * noise_variance * W.trace();
    return grad;
}

/// Generalized-least-squares mean coefficients given kernel and noise.
inline Eigen::VectorXd profile_beta(MeanKind kind, const Kernel& kernel, double noise_variance,
                                    const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    detail::check_data(X, y);
    const auto chol = detail::factorize(gram_matrix(kernel, X), noise_variance);
    const auto lower = chol.L.triangularView<Eigen::Lower>();
    const Eigen::MatrixXd A = lower.solve(design_matrix(kind, X));
    const Eigen::VectorXd b = lower.solve(y);
    return A.colPivHouseholderQr().solve(b);
}

/// Log-hyperparameter packing used by the optimizer and the multi-start
/// draws: [log sf2, log l_1.., (log shape), log sn2].
inline Eigen::VectorXd pack_log_params(const Kernel& kernel, double noise_variance) {
    Eigen::VectorXd v(kernel.n_params() + 1);
    v[0] = std::log(kernel.signal_variance);
    for (Eigen::Index d = 0; d < kernel.length_scales.size(); ++d)
        v[1 + d] = std::log(kernel.length_scales[d]);
    if (kernel.family == KernelFamily::rational_quadratic)
        v[v.size() - 2] = std::log(kernel.shape);
    v[v.size() - 1] = std::log(noise_variance);
    return v;
}

inline void unpack_log_params(const Eigen::VectorXd& v, Kernel& kernel, double& noise_variance) {
    if (v.size() != kernel.n_params() + 1)
        throw ArgumentError("log-parameter vector has the wrong length");
    kernel.signal_variance = std::exp(v[0]);
    for (Eigen::Index d = 0; d < kernel.length_scales.size(); ++d)
        kernel.length_scales[d] = std::exp(v[1 + d]);
    if (kernel.family == KernelFamily::rational_quadratic)
        kernel.shape = std::exp(v[v.size() - 2]);
    noise_variance = std::exp(v[v.size() - 1]);
}

/// Model choice to fit: mean basis order plus kernel family/variant.
struct EmulatorSpec {
    MeanKind mean = MeanKind::constant;
    KernelFamily kernel = KernelFamily::squared_exponential;
    bool ard = false;
};

struct FitOptions {
    int n_starts = 8;
    std::uint64_t seed = 0;
    double gradient_tolerance = 1e-5;
    int max_iterations = 200;
    unsigned jobs = 1;
};

struct PredictResult {
    Eigen::VectorXd mean;
    Eigen::VectorXd latent_variance;       ///< variance of the latent function
    Eigen::VectorXd observation_variance;  ///< latent variance plus noise
};

/// Half-width multiplier of the central 95% band of a Gaussian.
inline constexpr double k95 = 1.96;

/// An immutable fitted emulator: model, data and the cached factorization
/// used by every prediction. Safe for concurrent predict() calls.
class TrainedEmulator {
public:
    TrainedEmulator(MeanBasis mean, Kernel kernel, double noise_variance, Eigen::MatrixXd inputs,
                    Eigen::VectorXd targets, std::uint64_t seed)
        : mean_(std::move(mean)),
          kernel_(std::move(kernel)),
          noise_variance_(noise_variance),
          X_(std::move(inputs)),
          y_(std::move(targets)),
          seed_(seed) {
        detail::check_data(X_, y_);
        if (!(noise_variance_ >= 0.0)) throw ArgumentError("noise variance must be nonnegative");
        validate_kernel(kernel_, static_cast<int>(X_.cols()));
        validate_mean(mean_, static_cast<int>(X_.cols()));
        const auto chol = detail::factorize(gram_matrix(kernel_, X_), noise_variance_);
        L_ = chol.L;
        jitter_ = chol.jitter;
        const Eigen::VectorXd resid = y_ - mean_values(mean_, X_);
        const Eigen::VectorXd white = L_.triangularView<Eigen::Lower>().solve(resid);
        lml_ = -0.5 * white.squaredNorm() - L_.diagonal().array().log().sum() -
               0.5 * static_cast<double>(X_.rows()) * kLogTwoPi;
        alpha_ = L_.transpose().triangularView<Eigen::Upper>().solve(white);
    }

    const MeanBasis& mean() const { return mean_; }
    const Kernel& kernel() const { return kernel_; }
    double noise_variance() const { return noise_variance_; }
    const Eigen::MatrixXd& train_inputs() const { return X_; }
    const Eigen::VectorXd& train_targets() const { return y_; }
    const Eigen::MatrixXd& cholesky_factor() const { return L_; }
    double jitter() const { return jitter_; }
    double log_marginal() const { return lml_; }
    std::uint64_t seed() const { return seed_; }

    /// Posterior mean and variance at the query points (rows of Q).
    PredictResult predict(const Eigen::MatrixXd& Q) const {
        if (Q.cols() != X_.cols()) throw ArgumentError("predict: input dimension mismatch");
        const Eigen::MatrixXd Ks = cross_gram(kernel_, X_, Q);
        PredictResult out;
        out.mean = design_matrix(mean_.kind, Q) * mean_.beta + Ks.transpose() * alpha_;
        const Eigen::MatrixXd V = L_.triangularView<Eigen::Lower>().solve(Ks);
        out.latent_variance =
            (kernel_.signal_variance - V.colwise().squaredNorm().transpose().array())
                .max(0.0)
                .matrix();
        out.observation_variance = out.latent_variance.array() + noise_variance_;
        return out;
    }

private:
    MeanBasis mean_;
    Kernel kernel_;
    double noise_variance_;
    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;
    std::uint64_t seed_;
    Eigen::MatrixXd L_;
    Eigen::VectorXd alpha_;
    double lml_ = 0.0;
    double jitter_ = 0.0;
};

inline PredictResult predict(const TrainedEmulator& emulator, const Eigen::MatrixXd& Q) {
    return emulator.predict(Q);
}

namespace detail {

struct ProfiledEval {
    double lml = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad;
    Eigen::VectorXd beta;
};

/// Likelihood, gradient and GLS coefficients in one factorization. The
/// gradient of the profiled objective equals the fixed-beta gradient at the
/// GLS optimum (the beta stationarity condition zeroes the cross term).
inline ProfiledEval profiled_lml(MeanKind kind, const Kernel& kernel, double noise_variance,
                                 const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 bool want_gradient) {
    const Eigen::Index n = X.rows();
    const auto chol = factorize(gram_matrix(kernel, X), noise_variance);
    const auto lower = chol.L.triangularView<Eigen::Lower>();
    const Eigen::MatrixXd A = lower.solve(design_matrix(kind, X));
    const Eigen::VectorXd b = lower.solve(y);
    ProfiledEval out;
    out.beta = A.colPivHouseholderQr().solve(b);
    const Eigen::VectorXd white = b - A * out.beta;
    out.lml = -0.5 * white.squaredNorm() - chol.L.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * kLogTwoPi;
    if (!want_gradient) return out;

    const Eigen::VectorXd alpha = chol.L.transpose().triangularView<Eigen::Upper>().solve(white);
    Eigen::MatrixXd Kinv = Eigen::MatrixXd::Identity(n, n);
    lower.solveInPlace(Kinv);
    chol.L.transpose().triangularView<Eigen::Upper>().solveInPlace(Kinv);
    const Eigen::MatrixXd W = alpha * alpha.transpose() - Kinv;
    const auto dK = gram_gradients(kernel, X);
    out.grad.resize(kernel.n_params() + 1);
    for (std::size_t j = 0; j < dK.size(); ++j)
        out.grad[static_cast<Eigen::Index>(j)] = 0.5 * W.cwiseProduct(dK[j]).sum();
    out.grad[out.grad.size() - 1] = 0.5 * noise_variance * W.trace();
    return out;
}

}  // namespace detail

/// Maximum-marginal-likelihood fit of the spec'd model. Hyperparameters are
/// optimized as logs with quasi-Newton iterations from seeded log-uniform
/// multi-starts; mean coefficients come from GLS at every evaluation. All
/// starts failing raises OptimizationFailedError; constant targets take a
/// prior-mean-only shortcut since the likelihood has no curvature to use.
inline TrainedEmulator fit(const EmulatorSpec& spec, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, const FitOptions& opts = {}) {
    if (X.rows() < 2) throw ArgumentError("fit needs at least 2 training points");
    detail::check_data(X, y);
    if (opts.n_starts < 1) throw ArgumentError("fit needs at least one start");
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    const Eigen::Index n_scales = spec.ard ? d : 1;

    Kernel kernel_template;
    kernel_template.family = spec.kernel;
    kernel_template.ard = spec.ard;
    kernel_template.length_scales = Eigen::VectorXd::Ones(n_scales);

    Eigen::VectorXd ranges(d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const double span = X.col(c).maxCoeff() - X.col(c).minCoeff();
        ranges[c] = span > 0.0 ? span : 1.0;
    }
    const double y_variance = (y.array() - y.mean()).square().sum() / static_cast<double>(n);

    if (y_variance == 0.0) {
        // Degenerate constant targets: pin the kernel at the floor and let the
        // basis carry the value.
        Kernel k = kernel_template;
        k.signal_variance = 1e-12;
        for (Eigen::Index s = 0; s < n_scales; ++s)
            k.length_scales[s] = spec.ard ? ranges[s] : ranges.maxCoeff();
        const Eigen::MatrixXd H = design_matrix(spec.mean, X);
        MeanBasis mean{spec.mean, H.colPivHouseholderQr().solve(y)};
        return TrainedEmulator(std::move(mean), std::move(k), 1e-12, X, y, opts.seed);
    }

    const auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) -> double {
        if (v.lpNorm<Eigen::Infinity>() > 60.0) return std::numeric_limits<double>::infinity();
        Kernel k = kernel_template;
        double noise_variance = 0.0;
        unpack_log_params(v, k, noise_variance);
        try {
            const auto eval = detail::profiled_lml(spec.mean, k, noise_variance, X, y, true);
            grad = -eval.grad;
            return -eval.lml;
        } catch (const NotPositiveDefiniteError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    LbfgsOptions lbfgs_opts;
    lbfgs_opts.max_iterations = opts.max_iterations;
    lbfgs_opts.gradient_tolerance = opts.gradient_tolerance;

    struct StartOutcome {
        bool ok = false;
        double value = std::numeric_limits<double>::infinity();
        Eigen::VectorXd x;
    };
    std::vector<StartOutcome> outcomes(static_cast<std::size_t>(opts.n_starts));
    parallel_for(outcomes.size(), opts.jobs, [&](std::size_t i) {
        Rng rng(mix_seed(opts.seed, i));
        Eigen::VectorXd v0(kernel_template.n_params() + 1);
        v0[0] = std::log(rng.log_uniform(1e-4 * y_variance, 10.0 * y_variance));
        for (Eigen::Index s = 0; s < n_scales; ++s) {
            const double r = spec.ard ? ranges[s] : ranges.maxCoeff();
            v0[1 + s] = std::log(rng.log_uniform(0.01 * r, 10.0 * r));
        }
        if (spec.kernel == KernelFamily::rational_quadratic)
            v0[v0.size() - 2] = std::log(rng.log_uniform(0.1, 10.0));
        v0[v0.size() - 1] = std::log(rng.log_uniform(1e-8 * y_variance, y_variance));

        const LbfgsResult res = lbfgs_minimize(objective, std::move(v0), lbfgs_opts);
        if (std::isfinite(res.value)) outcomes[i] = {true, res.value, res.x};
    });

    const StartOutcome* best = nullptr;
    for (const auto& o : outcomes)
        if (o.ok && (!best || o.value < best->value)) best = &o;
    if (!best) throw OptimizationFailedError("all optimizer starts failed");

    Kernel kernel = kernel_template;
    double noise_variance = 0.0;
    unpack_log_params(best->x, kernel, noise_variance);
    const auto final_eval = detail::profiled_lml(spec.mean, kernel, noise_variance, X, y, false);
    MeanBasis mean{spec.mean, final_eval.beta};
    return TrainedEmulator(std::move(mean), std::move(kernel), noise_variance, X, y, opts.seed);
}

/// Independent-output specialization of a two-channel GP: fits each channel
/// separately with identical options, so the result is channel-wise equal to
/// two fit() calls.
inline std::pair<TrainedEmulator, TrainedEmulator> fit_multioutput(const EmulatorSpec& spec,
                                                                   const Eigen::MatrixXd& X,
                                                                   const Eigen::VectorXd& first,
                                                                   const Eigen::VectorXd& second,
                                                                   const FitOptions& opts = {}) {
    if (first.size() != second.size())
        throw ArgumentError("fit_multioutput: channels must share the input grid");
    return {fit(spec, X, first, opts), fit(spec, X, second, opts)};
}

}  // namespace twingp
