#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include <twingp/gp.hpp>
#include <twingp/rng.hpp>
#include <twingp/selection.hpp>

using namespace twingp;
using Catch::Matchers::WithinAbs;

namespace {

// Dense brute-force oracle: explicit inverse and determinant, no Cholesky,
// independent of the library's inference path.
double oracle_lml(const MeanBasis& mean, const Kernel& kernel, double noise_variance,
                  const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd Ky = gram_matrix(kernel, X);
    Ky.diagonal().array() += noise_variance;
    const Eigen::MatrixXd Kinv = Ky.inverse();
    const Eigen::VectorXd r = y - mean_values(mean, X);
    return -0.5 * r.dot(Kinv * r) - 0.5 * std::log(Ky.determinant()) -
           0.5 * static_cast<double>(n) * kLogTwoPi;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> oracle_predict(const MeanBasis& mean,
                                                           const Kernel& kernel,
                                                           double noise_variance,
                                                           const Eigen::MatrixXd& X,
                                                           const Eigen::VectorXd& y,
                                                           const Eigen::MatrixXd& Q) {
    Eigen::MatrixXd Ky = gram_matrix(kernel, X);
    Ky.diagonal().array() += noise_variance;
    const Eigen::MatrixXd Kinv = Ky.inverse();
    const Eigen::VectorXd r = y - mean_values(mean, X);
    const Eigen::MatrixXd Ks = cross_gram(kernel, X, Q);
    const Eigen::VectorXd mu = mean_values(mean, Q) + Ks.transpose() * (Kinv * r);
    Eigen::VectorXd var(Q.rows());
    for (Eigen::Index i = 0; i < Q.rows(); ++i)
        var[i] = kernel.signal_variance - Ks.col(i).dot(Kinv * Ks.col(i));
    return {mu, var};
}

Eigen::MatrixXd column(std::initializer_list<double> values) {
    Eigen::MatrixXd X(values.size(), 1);
    Eigen::Index i = 0;
    for (const double v : values) X(i++, 0) = v;
    return X;
}

MeanBasis zero_mean(MeanKind kind, int dim) {
    return {kind, Eigen::VectorXd::Zero(basis_size(kind, dim))};
}

Kernel make_kernel(KernelFamily family, bool ard, double sf2, double ell, double shape = 1.0) {
    Kernel k;
    k.family = family;
    k.ard = ard;
    k.signal_variance = sf2;
    k.length_scales = Eigen::VectorXd::Constant(1, ell);
    k.shape = shape;
    return k;
}

}  // namespace

TEST_CASE("log marginal likelihood of single-point datasets") {
    const Eigen::MatrixXd X = column({0.3});
    const Kernel k = make_kernel(KernelFamily::squared_exponential, false, 1.0, 1.0);
    const MeanBasis mean = zero_mean(MeanKind::constant, 1);

    Eigen::VectorXd y0(1);
    y0 << 0.0;
    CHECK_THAT(log_marginal_likelihood(mean, k, 0.0, X, y0),
               WithinAbs(-0.5 * kLogTwoPi, 1e-14));

    Eigen::VectorXd y1(1);
    y1 << 1.0;
    CHECK_THAT(log_marginal_likelihood(mean, k, 0.0, X, y1),
               WithinAbs(-0.5 - 0.5 * kLogTwoPi, 1e-14));
}

TEST_CASE("log marginal likelihood matches the frozen two-point value") {
    const Eigen::MatrixXd X = column({0.0, 1.0});
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
    const Kernel k = make_kernel(KernelFamily::squared_exponential, false, 1.0, 1.0);
    CHECK_THAT(log_marginal_likelihood(zero_mean(MeanKind::constant, 1), k, 0.1, X, y),
               WithinAbs(-1.7519610196679938, 1e-12));
}

TEST_CASE("inference matches the dense oracle for every mean and kernel") {
    Rng rng(71);
    for (const MeanKind mean_kind : {MeanKind::constant, MeanKind::linear, MeanKind::quadratic}) {
        for (const auto& [family, ard] : kernel_pool_order()) {
            const Eigen::MatrixXd X = column({-1.1, -0.2, 0.4, 1.3});
            Eigen::VectorXd y(4);
            for (int i = 0; i < 4; ++i) y[i] = rng.normal();
            const Kernel k = make_kernel(family, ard, 1.4, 0.9, 1.7);
            MeanBasis mean{mean_kind, Eigen::VectorXd::Zero(basis_size(mean_kind, 1))};
            for (Eigen::Index b = 0; b < mean.beta.size(); ++b) mean.beta[b] = rng.normal();
            const double noise = 0.05;

            CHECK_THAT(log_marginal_likelihood(mean, k, noise, X, y),
                       WithinAbs(oracle_lml(mean, k, noise, X, y), 1e-10));

            const TrainedEmulator emulator(mean, k, noise, X, y, 0);
            const Eigen::MatrixXd Q = column({-0.7, 0.1, 0.9, 2.0});
            const auto pred = emulator.predict(Q);
            const auto [mu, var] = oracle_predict(mean, k, noise, X, y, Q);
            CHECK((pred.mean - mu).lpNorm<Eigen::Infinity>() <= 1e-10);
            CHECK((pred.latent_variance - var).lpNorm<Eigen::Infinity>() <= 1e-10);
            const Eigen::VectorXd expected_obs =
                (pred.latent_variance.array() + noise).matrix();
            CHECK(pred.observation_variance == expected_obs);
        }
    }
}

TEST_CASE("lml gradient matches central finite differences") {
    Rng rng(101);
    const auto families = kernel_pool_order();
    for (int trial = 0; trial < 20; ++trial) {
        const auto& [family, ard] = families[static_cast<std::size_t>(trial) % families.size()];
        Eigen::MatrixXd X(5, 1);
        for (int i = 0; i < 5; ++i) X(i, 0) = rng.uniform(-2.0, 2.0);
        Eigen::VectorXd y(5);
        for (int i = 0; i < 5; ++i) y[i] = rng.normal();
        const Kernel kernel =
            make_kernel(family, ard, rng.log_uniform(0.3, 3.0), rng.log_uniform(0.3, 3.0),
                        rng.log_uniform(0.5, 2.0));
        const double noise = rng.log_uniform(0.01, 0.5);
        const MeanBasis mean{MeanKind::linear, Eigen::Vector2d(0.1, -0.2)};

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
            CHECK_THAT(grad[p], WithinAbs(fd, 1e-5 * std::max(1.0, std::abs(fd))));
        }
    }
}

TEST_CASE("noise-free emulator interpolates its training data") {
    const Eigen::MatrixXd X = column({0.0, 0.7, 1.9, 3.2, 4.5});
    Eigen::VectorXd y(5);
    y << 0.1, -0.4, 0.3, 0.8, -0.2;
    const TrainedEmulator emulator(zero_mean(MeanKind::constant, 1),
                                   make_kernel(KernelFamily::squared_exponential, false, 1.0, 1.0),
                                   0.0, X, y, 0);
    const auto pred = emulator.predict(X);
    CHECK((pred.mean - y).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(pred.latent_variance.maxCoeff() <= 1e-8);
}

TEST_CASE("predictions revert to the prior far from the data") {
    const Eigen::MatrixXd X = column({0.0, 0.5, 1.0});
    Eigen::VectorXd y(3);
    y << 1.0, 1.4, 0.6;
    const MeanBasis prior{MeanKind::constant, Eigen::VectorXd::Constant(1, 0.9)};
    const double spread = (y.array() - 0.9).abs().maxCoeff();

    for (const auto& [family, ard] : kernel_pool_order()) {
        // Heavy rational-quadratic tails need more distance to decay.
        const double distance = family == KernelFamily::rational_quadratic ? 60.0 : 12.0;
        const Kernel k = make_kernel(family, ard, 0.8, 1.0, 1.0);
        const TrainedEmulator emulator(prior, k, 1e-4, X, y, 0);
        const auto pred = emulator.predict(column({distance}));
        CHECK(std::abs(pred.mean[0] - 0.9) <= 0.01 * spread);
        CHECK(std::abs(pred.latent_variance[0] - k.signal_variance) <=
              0.01 * k.signal_variance);
    }
}

TEST_CASE("adding a training point never increases posterior variance") {
    const Kernel k = make_kernel(KernelFamily::matern52, false, 1.0, 1.2);
    const MeanBasis mean = zero_mean(MeanKind::constant, 1);
    const Eigen::MatrixXd X5 = column({0.0, 1.0, 2.0, 3.0, 4.0});
    Eigen::VectorXd y5(5);
    y5 << 0.3, -0.1, 0.2, 0.5, -0.4;
    const Eigen::MatrixXd X6 = column({0.0, 1.0, 2.0, 3.0, 4.0, 2.5});
    Eigen::VectorXd y6(6);
    y6 << 0.3, -0.1, 0.2, 0.5, -0.4, 0.1;

    const TrainedEmulator before(mean, k, 0.0, X5, y5, 0);
    const TrainedEmulator after(mean, k, 0.0, X6, y6, 0);
    const Eigen::MatrixXd Q = column({-0.5, 0.25, 1.5, 2.2, 2.8, 3.7, 5.0});
    const auto var_before = before.predict(Q).latent_variance;
    const auto var_after = after.predict(Q).latent_variance;
    for (Eigen::Index i = 0; i < Q.rows(); ++i)
        CHECK(var_after[i] <= var_before[i] + 1e-10);
}

TEST_CASE("fit recovers an exactly linear trend") {
    Eigen::MatrixXd X(10, 1);
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) {
        X(i, 0) = 0.5 * i;
        y[i] = 2.0 + 0.5 * X(i, 0);
    }
    const double y_var = (y.array() - y.mean()).square().sum() / 10.0;
    FitOptions opts;
    opts.seed = 3;
    const TrainedEmulator emulator = fit({MeanKind::linear, KernelFamily::squared_exponential,
                                          false},
                                         X, y, opts);
    CHECK(emulator.kernel().signal_variance <= 0.01 * y_var);
    const auto pred = emulator.predict(column({0.25, 1.1, 3.3}));
    CHECK_THAT(pred.mean[0], WithinAbs(2.0 + 0.5 * 0.25, 1e-6));
    CHECK_THAT(pred.mean[1], WithinAbs(2.0 + 0.5 * 1.1, 1e-6));
    CHECK_THAT(pred.mean[2], WithinAbs(2.0 + 0.5 * 3.3, 1e-6));
}

TEST_CASE("refits with the same seed are bitwise identical") {
    Rng rng(11);
    Eigen::MatrixXd X(12, 1);
    Eigen::VectorXd y(12);
    for (int i = 0; i < 12; ++i) {
        X(i, 0) = i * 0.4;
        y[i] = std::sin(X(i, 0)) + 0.05 * rng.normal();
    }
    FitOptions opts;
    opts.seed = 99;
    const EmulatorSpec spec{MeanKind::constant, KernelFamily::matern32, false};
    const TrainedEmulator a = fit(spec, X, y, opts);
    const TrainedEmulator b = fit(spec, X, y, opts);
    CHECK(a.kernel().signal_variance == b.kernel().signal_variance);
    CHECK(a.kernel().length_scales == b.kernel().length_scales);
    CHECK(a.noise_variance() == b.noise_variance());
    CHECK(a.mean().beta == b.mean().beta);
    CHECK(a.log_marginal() == b.log_marginal());

    // Thread count must not change the outcome either.
    FitOptions threaded = opts;
    threaded.jobs = 4;
    const TrainedEmulator c = fit(spec, X, y, threaded);
    CHECK(a.kernel().length_scales == c.kernel().length_scales);
    CHECK(a.log_marginal() == c.log_marginal());
}

TEST_CASE("fitted optimum satisfies the first-order condition") {
    Rng rng(13);
    Eigen::MatrixXd X(20, 1);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) {
        X(i, 0) = i * 0.3;
        y[i] = std::sin(X(i, 0)) + 0.1 * rng.normal();
    }
    FitOptions opts;
    opts.seed = 4;
    const TrainedEmulator e =
        fit({MeanKind::constant, KernelFamily::squared_exponential, false}, X, y, opts);
    const Eigen::VectorXd grad =
        lml_gradient(e.mean(), e.kernel(), e.noise_variance(), X, y);
    CHECK(grad.lpNorm<Eigen::Infinity>() <= 1e-4);
}

TEST_CASE("no random hyperparameter probe beats the fitted optimum") {
    Rng data_rng(29);
    Eigen::MatrixXd X(15, 1);
    Eigen::VectorXd y(15);
    for (int i = 0; i < 15; ++i) {
        X(i, 0) = i * 0.5;
        y[i] = std::cos(0.8 * X(i, 0)) + 0.1 * data_rng.normal();
    }
    const double y_var = (y.array() - y.mean()).square().sum() / 15.0;
    const double range = X(14, 0) - X(0, 0);
    const EmulatorSpec spec{MeanKind::constant, KernelFamily::matern52, false};
    FitOptions opts;
    opts.seed = 8;
    const TrainedEmulator e = fit(spec, X, y, opts);

    Rng probe_rng(77);
    for (int probe = 0; probe < 100; ++probe) {
        Kernel k = make_kernel(spec.kernel, false, probe_rng.log_uniform(1e-4 * y_var, 10 * y_var),
                               probe_rng.log_uniform(0.01 * range, 10 * range));
        const double noise = probe_rng.log_uniform(1e-8 * y_var, y_var);
        const Eigen::VectorXd beta = profile_beta(spec.mean, k, noise, X, y);
        const double lml = log_marginal_likelihood({spec.mean, beta}, k, noise, X, y);
        CHECK(lml <= e.log_marginal() + 1e-9);
    }
}

TEST_CASE("constant targets take the degenerate shortcut") {
    const Eigen::MatrixXd X = column({0.0, 1.0, 2.0, 3.0});
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(4, 3.7);
    const TrainedEmulator e =
        fit({MeanKind::constant, KernelFamily::rational_quadratic, false}, X, y, {});
    const auto pred = e.predict(column({0.5, 10.0}));
    CHECK_THAT(pred.mean[0], WithinAbs(3.7, 1e-9));
    CHECK_THAT(pred.mean[1], WithinAbs(3.7, 1e-9));
    CHECK(e.kernel().signal_variance <= 1e-12);
}

TEST_CASE("multioutput fit equals channel-wise fits") {
    Rng rng(55);
    Eigen::MatrixXd X(10, 1);
    Eigen::VectorXd y1(10), y2(10);
    for (int i = 0; i < 10; ++i) {
        X(i, 0) = i * 0.7;
        y1[i] = std::sin(X(i, 0)) + 0.02 * rng.normal();
        y2[i] = 0.3 * X(i, 0) + 0.02 * rng.normal();
    }
    FitOptions opts;
    opts.seed = 21;
    const EmulatorSpec spec{MeanKind::linear, KernelFamily::matern52, false};
    const auto [em1, em2] = fit_multioutput(spec, X, y1, y2, opts);
    const TrainedEmulator ref1 = fit(spec, X, y1, opts);
    const TrainedEmulator ref2 = fit(spec, X, y2, opts);
    CHECK(em1.kernel().length_scales == ref1.kernel().length_scales);
    CHECK(em1.log_marginal() == ref1.log_marginal());
    CHECK(em2.kernel().length_scales == ref2.kernel().length_scales);
    CHECK(em2.log_marginal() == ref2.log_marginal());

    // Identical channels give identical fits.
    const auto [same1, same2] = fit_multioutput(spec, X, y1, y1, opts);
    CHECK(same1.kernel().length_scales == same2.kernel().length_scales);
    CHECK(same1.mean().beta == same2.mean().beta);
    CHECK(same1.noise_variance() == same2.noise_variance());
}

TEST_CASE("fit input validation") {
    const Eigen::MatrixXd X = column({0.0});
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(1);
    CHECK_THROWS_AS(fit({}, X, y, {}), ArgumentError);

    const Eigen::MatrixXd X2 = column({0.0, 1.0});
    Eigen::VectorXd bad(2);
    bad << 1.0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(fit({}, X2, bad, {}), ArgumentError);

    FitOptions zero_starts;
    zero_starts.n_starts = 0;
    Eigen::VectorXd ok(2);
    ok << 0.0, 1.0;
    CHECK_THROWS_AS(fit({}, X2, ok, zero_starts), ArgumentError);
}

TEST_CASE("factorization invariant of a trained emulator") {
    Rng rng(91);
    Eigen::MatrixXd X(8, 1);
    Eigen::VectorXd y(8);
    for (int i = 0; i < 8; ++i) {
        X(i, 0) = i * 0.9;
        y[i] = rng.normal();
    }
    const Kernel k = make_kernel(KernelFamily::matern32, false, 1.2, 0.8);
    const TrainedEmulator e(zero_mean(MeanKind::constant, 1), k, 0.05, X, y, 0);
    Eigen::MatrixXd Ky = gram_matrix(k, X);
    Ky.diagonal().array() += 0.05;
    const Eigen::MatrixXd reconstructed =
        e.cholesky_factor() * e.cholesky_factor().transpose();
    CHECK((reconstructed - Ky).lpNorm<Eigen::Infinity>() <= 1e-8 * Ky.lpNorm<Eigen::Infinity>());
}
