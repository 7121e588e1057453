#pragma once

// Polynomial mean bases for the emulator: constant, linear and quadratic in
// each input coordinate (1, 2 and 3 coefficients for scalar inputs).

#include <string>

#include <Eigen/Dense>

#include <twingp/errors.hpp>

namespace twingp {

enum class MeanKind { constant, linear, quadratic };

inline const char* to_string(MeanKind k) {
    switch (k) {
        case MeanKind::constant: return "constant";
        case MeanKind::linear: return "linear";
        case MeanKind::quadratic: return "quadratic";
    }
    throw ArgumentError("unknown mean kind");
}

inline MeanKind mean_kind_from_string(const std::string& s) {
    if (s == "constant") return MeanKind::constant;
    if (s == "linear") return MeanKind::linear;
    if (s == "quadratic") return MeanKind::quadratic;
    throw ArgumentError("unknown mean kind '" + s + "'");
}

inline std::string display_name(MeanKind k) {
    switch (k) {
        case MeanKind::constant: return "Constant";
        case MeanKind::linear: return "Linear";
        case MeanKind::quadratic: return "Quadratic";
    }
    throw ArgumentError("unknown mean kind");
}

inline int basis_size(MeanKind kind, int input_dim) {
    switch (kind) {
        case MeanKind::constant: return 1;
        case MeanKind::linear: return 1 + input_dim;
        case MeanKind::quadratic: return 1 + 2 * input_dim;
    }
    throw ArgumentError("unknown mean kind");
}

/// Design matrix with columns [1, x_1..x_d, x_1^2..x_d^2] truncated to the
/// basis order.
inline Eigen::MatrixXd design_matrix(MeanKind kind, const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    Eigen::MatrixXd H(n, basis_size(kind, static_cast<int>(d)));
    H.col(0).setOnes();
    if (kind != MeanKind::constant) H.middleCols(1, d) = X;
    if (kind == MeanKind::quadratic) H.middleCols(1 + d, d) = X.array().square().matrix();
    return H;
}

/// A basis with fitted coefficients.
struct MeanBasis {
    MeanKind kind = MeanKind::constant;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
};

inline void validate_mean(const MeanBasis& mean, int input_dim) {
    if (mean.beta.size() != basis_size(mean.kind, input_dim))
        throw ArgumentError("mean basis has " + std::to_string(mean.beta.size()) +
                            " coefficients, expected " +
                            std::to_string(basis_size(mean.kind, input_dim)));
}

inline Eigen::VectorXd mean_values(const MeanBasis& mean, const Eigen::MatrixXd& X) {
    validate_mean(mean, static_cast<int>(X.cols()));
    return design_matrix(mean.kind, X) * mean.beta;
}

}  // namespace twingp
