#pragma once

// Stationary covariance kernels used by the emulator: Exponential, Squared
// Exponential, Matern 3/2, Matern 5/2 and Rational Quadratic, each in an
// isotropic and an ARD (per-dimension length-scale) variant. Values and
// analytic derivatives are expressed through the squared scaled distance
// s = sum_d ((x_d - x'_d)/l_d)^2, which keeps every family's log-length-scale
// gradient finite except the Exponential at r = 0 (defined as 0 there).

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <twingp/errors.hpp>

namespace twingp {

enum class KernelFamily {
    exponential,
    squared_exponential,
    matern32,
    matern52,
    rational_quadratic,
};

inline const char* to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::exponential: return "exponential";
        case KernelFamily::squared_exponential: return "squared_exponential";
        case KernelFamily::matern32: return "matern32";
        case KernelFamily::matern52: return "matern52";
        case KernelFamily::rational_quadratic: return "rational_quadratic";
    }
    throw ArgumentError("unknown kernel family");
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
    if (s == "exponential") return KernelFamily::exponential;
    if (s == "squared_exponential") return KernelFamily::squared_exponential;
    if (s == "matern32") return KernelFamily::matern32;
    if (s == "matern52") return KernelFamily::matern52;
    if (s == "rational_quadratic") return KernelFamily::rational_quadratic;
    throw ArgumentError("unknown kernel family '" + s + "'");
}

/// A kernel with concrete hyperparameters. `length_scales` holds one entry
/// for the isotropic variant or one per input dimension for ARD.
struct Kernel {
    KernelFamily family = KernelFamily::squared_exponential;
    bool ard = false;
    double signal_variance = 1.0;
    Eigen::VectorXd length_scales = Eigen::VectorXd::Ones(1);
    double shape = 1.0;  ///< rational quadratic only

    /// Number of log-hyperparameters: signal variance, length scale(s), and
    /// shape for the rational quadratic.
    int n_params() const {
        return 1 + static_cast<int>(length_scales.size()) +
               (family == KernelFamily::rational_quadratic ? 1 : 0);
    }

    std::string display_name() const {
        std::string name;
        if (ard) name += "ARD ";
        switch (family) {
            case KernelFamily::exponential: name += "Exponential"; break;
            case KernelFamily::squared_exponential: name += "Squared Exponential"; break;
            case KernelFamily::matern32: name += "Matern 3/2"; break;
            case KernelFamily::matern52: name += "Matern 5/2"; break;
            case KernelFamily::rational_quadratic: name += "Rational Quadratic"; break;
        }
        return name;
    }
};

inline void validate_kernel(const Kernel& k, int input_dim) {
    if (!(k.signal_variance > 0.0)) throw ArgumentError("kernel signal variance must be positive");
    const auto expected = k.ard ? input_dim : 1;
    if (k.length_scales.size() != expected)
        throw ArgumentError("kernel has " + std::to_string(k.length_scales.size()) +
                            " length scales, expected " + std::to_string(expected));
    for (Eigen::Index i = 0; i < k.length_scales.size(); ++i)
        if (!(k.length_scales[i] > 0.0)) throw ArgumentError("kernel length scales must be positive");
    if (k.family == KernelFamily::rational_quadratic && !(k.shape > 0.0))
        throw ArgumentError("rational quadratic shape must be positive");
}

namespace detail {

/// Correlation value and derivatives at squared scaled distance s.
struct CorrelationTerms {
    double rho = 1.0;
    double drho_ds = 0.0;
    double drho_dshape = 0.0;  // rational quadratic only
};

inline CorrelationTerms correlation(KernelFamily family, double s, double shape) {
    CorrelationTerms out;
    switch (family) {
        case KernelFamily::exponential: {
            const double r = std::sqrt(s);
            out.rho = std::exp(-r);
            // Non-differentiable at r = 0; the gradient there is taken as 0.
            out.drho_ds = r > 0.0 ? -out.rho / (2.0 * r) : 0.0;
            return out;
        }
        case KernelFamily::squared_exponential: {
            out.rho = std::exp(-0.5 * s);
            out.drho_ds = -0.5 * out.rho;
            return out;
        }
        case KernelFamily::matern32: {
            const double a = std::sqrt(3.0 * s);
            const double e = std::exp(-a);
            out.rho = (1.0 + a) * e;
            out.drho_ds = -1.5 * e;
            return out;
        }
        case KernelFamily::matern52: {
            const double a = std::sqrt(5.0 * s);
            const double e = std::exp(-a);
            out.rho = (1.0 + a + 5.0 * s / 3.0) * e;
            out.drho_ds = -(5.0 / 6.0) * (1.0 + a) * e;
            return out;
        }
        case KernelFamily::rational_quadratic: {
            const double z = s / (2.0 * shape);
            const double log1pz = std::log1p(z);
            out.rho = std::exp(-shape * log1pz);
            out.drho_ds = -0.5 * std::exp(-(shape + 1.0) * log1pz);
            out.drho_dshape = out.rho * (z / (1.0 + z) - log1pz);
            return out;
        }
    }
    throw ArgumentError("unknown kernel family");
}

/// Squared scaled distance between two points under the kernel's scales.
inline double scaled_sqdist(const Kernel& k, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (k.ard) return ((a - b).array() / k.length_scales.array()).square().sum();
    return (a - b).squaredNorm() / (k.length_scales[0] * k.length_scales[0]);
}

}  // namespace detail

/// Covariance between two inputs. Symmetric; equals the signal variance at
/// zero separation.
inline double kernel_eval(const Kernel& k, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    validate_kernel(k, static_cast<int>(a.size()));
    if (a.size() != b.size()) throw ArgumentError("kernel_eval: input dimension mismatch");
    return k.signal_variance * detail::correlation(k.family, detail::scaled_sqdist(k, a, b), k.shape).rho;
}

/// Gram matrix of the training inputs (rows of X are points).
inline Eigen::MatrixXd gram_matrix(const Kernel& k, const Eigen::MatrixXd& X) {
    validate_kernel(k, static_cast<int>(X.cols()));
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = k.signal_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double s = detail::scaled_sqdist(k, X.row(i).transpose(), X.row(j).transpose());
            K(i, j) = K(j, i) = k.signal_variance * detail::correlation(k.family, s, k.shape).rho;
        }
    }
    return K;
}

/// Cross-covariances k(X_i, Q_j) between training inputs and query points.
inline Eigen::MatrixXd cross_gram(const Kernel& k, const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& Q) {
    validate_kernel(k, static_cast<int>(X.cols()));
    if (Q.cols() != X.cols()) throw ArgumentError("cross_gram: input dimension mismatch");
    Eigen::MatrixXd K(X.rows(), Q.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < Q.rows(); ++j) {
            const double s = detail::scaled_sqdist(k, X.row(i).transpose(), Q.row(j).transpose());
            K(i, j) = k.signal_variance * detail::correlation(k.family, s, k.shape).rho;
        }
    return K;
}

/// Derivatives of the Gram matrix with respect to the kernel's
/// log-hyperparameters, ordered [log sf2, log l_1.., (log shape)].
inline std::vector<Eigen::MatrixXd> gram_gradients(const Kernel& k, const Eigen::MatrixXd& X) {
    validate_kernel(k, static_cast<int>(X.cols()));
    const Eigen::Index n = X.rows();
    const int n_params = k.n_params();
    std::vector<Eigen::MatrixXd> grads(static_cast<std::size_t>(n_params),
                                       Eigen::MatrixXd::Zero(n, n));
    const bool rq = k.family == KernelFamily::rational_quadratic;
    const Eigen::Index n_scales = k.length_scales.size();
    Eigen::VectorXd scaled_sq(n_scales);
    const auto set_sym = [](Eigen::MatrixXd& m, Eigen::Index i, Eigen::Index j, double v) {
        m(i, j) = v;
        m(j, i) = v;
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            if (k.ard) {
                scaled_sq = ((X.row(i) - X.row(j)).transpose().array() / k.length_scales.array())
                                .square();
            } else {
                scaled_sq[0] = (X.row(i) - X.row(j)).squaredNorm() /
                               (k.length_scales[0] * k.length_scales[0]);
            }
            const double s = scaled_sq.sum();
            const auto terms = detail::correlation(k.family, s, k.shape);
            // d/d log sf2 of sf2 * rho is the kernel value itself.
            set_sym(grads[0], i, j, k.signal_variance * terms.rho);
            // d s / d log l_d = -2 * scaled_sq_d.
            for (Eigen::Index d = 0; d < n_scales; ++d)
                set_sym(grads[static_cast<std::size_t>(1 + d)], i, j,
                        k.signal_variance * terms.drho_ds * (-2.0 * scaled_sq[d]));
            if (rq)
                set_sym(grads.back(), i, j, k.signal_variance * terms.drho_dshape * k.shape);
        }
    }
    return grads;
}

/// The candidate kernel pool order: plain families first, then ARD variants.
inline std::vector<std::pair<KernelFamily, bool>> kernel_pool_order() {
    return {
        {KernelFamily::exponential, false},        {KernelFamily::squared_exponential, false},
        {KernelFamily::matern32, false},           {KernelFamily::matern52, false},
        {KernelFamily::rational_quadratic, false}, {KernelFamily::exponential, true},
        {KernelFamily::squared_exponential, true}, {KernelFamily::matern32, true},
        {KernelFamily::matern52, true},            {KernelFamily::rational_quadratic, true},
    };
}

}  // namespace twingp
