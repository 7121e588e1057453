#pragma once

// Limited-memory BFGS with a strong-Wolfe line search, for smooth
// unconstrained minimization of the negative log marginal likelihood in
// log-hyperparameter space. Objectives may return non-finite values; the
// line search treats those as out-of-bounds and backs off.

#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Dense>

namespace twingp {

struct LbfgsOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-5;  ///< on the max-norm of the gradient
    int history = 8;
    int max_line_search_steps = 30;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd gradient;
    int iterations = 0;
    bool converged = false;  ///< gradient tolerance reached
};

namespace detail {

/// Minimizer of the cubic through (a, fa, ga) and (b, fb, gb), clipped to the
/// interior of [a, b]; falls back to bisection when the fit degenerates.
inline double cubic_step(double a, double fa, double ga, double b, double fb, double gb) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    double candidate;
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        candidate = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    } else {
        candidate = 0.5 * (a + b);
    }
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double margin = 0.1 * (hi - lo);
    if (!std::isfinite(candidate) || candidate < lo + margin || candidate > hi - margin)
        candidate = 0.5 * (a + b);
    return candidate;
}

}  // namespace detail

/// Minimizes `f`, which must fill the gradient and return the value:
/// `double f(const Eigen::VectorXd& x, Eigen::VectorXd& grad)`.
template <typename Objective>
LbfgsResult lbfgs_minimize(Objective&& f, Eigen::VectorXd x0, const LbfgsOptions& opts = {}) {
    constexpr double c1 = 1e-4;
    constexpr double c2 = 0.9;
    const auto dim = x0.size();

    LbfgsResult result;
    result.x = std::move(x0);
    result.gradient.resize(dim);
    result.value = f(result.x, result.gradient);
    if (!std::isfinite(result.value)) return result;

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;
    Eigen::VectorXd direction(dim), x_trial(dim), g_trial(dim);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (result.gradient.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance) {
            result.converged = true;
            return result;
        }

        // Two-loop recursion for d = -H g.
        direction = -result.gradient;
        const std::size_t m = s_hist.size();
        Eigen::VectorXd alpha_coef(static_cast<Eigen::Index>(m));
        for (std::size_t i = m; i-- > 0;) {
            alpha_coef[static_cast<Eigen::Index>(i)] =
                rho_hist[i] * s_hist[i].dot(direction);
            direction -= alpha_coef[static_cast<Eigen::Index>(i)] * y_hist[i];
        }
        if (m > 0) {
            const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            direction *= gamma;
        }
        for (std::size_t i = 0; i < m; ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(direction);
            direction += (alpha_coef[static_cast<Eigen::Index>(i)] - beta) * s_hist[i];
        }

        double dphi0 = result.gradient.dot(direction);
        if (!(dphi0 < 0.0)) {
            // Stale curvature produced a non-descent direction; restart.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            direction = -result.gradient;
            dphi0 = result.gradient.dot(direction);
            if (!(dphi0 < 0.0)) return result;
        }

        // Strong-Wolfe line search (bracket then zoom).
        const double phi0 = result.value;
        double alpha_prev = 0.0, phi_prev = phi0, dphi_prev = dphi0;
        double alpha = iter == 0 ? std::min(1.0, 1.0 / std::max(1.0, -dphi0)) : 1.0;
        double alpha_lo = -1.0, alpha_hi = -1.0;
        double phi_lo = 0.0, dphi_lo = 0.0, phi_hi = 0.0, dphi_hi = 0.0;
        bool hi_is_finite = true;
        bool accepted = false, bracketed = false;
        double phi = phi0, dphi = dphi0;

        const auto eval = [&](double a) {
            x_trial = result.x + a * direction;
            phi = f(x_trial, g_trial);
            dphi = std::isfinite(phi) ? g_trial.dot(direction)
                                      : std::numeric_limits<double>::quiet_NaN();
        };

        for (int ls = 0; ls < opts.max_line_search_steps && !accepted && !bracketed; ++ls) {
            eval(alpha);
            if (!std::isfinite(phi)) {
                // Too far out; bracket against the last good point.
                alpha_lo = alpha_prev;
                phi_lo = phi_prev;
                dphi_lo = dphi_prev;
                alpha_hi = alpha;
                hi_is_finite = false;
                bracketed = true;
                break;
            }
            if (phi > phi0 + c1 * alpha * dphi0 || (ls > 0 && phi >= phi_prev)) {
                alpha_lo = alpha_prev;
                phi_lo = phi_prev;
                dphi_lo = dphi_prev;
                alpha_hi = alpha;
                phi_hi = phi;
                dphi_hi = dphi;
                bracketed = true;
                break;
            }
            if (std::abs(dphi) <= -c2 * dphi0) {
                accepted = true;
                break;
            }
            if (dphi >= 0.0) {
                alpha_lo = alpha;
                phi_lo = phi;
                dphi_lo = dphi;
                alpha_hi = alpha_prev;
                phi_hi = phi_prev;
                dphi_hi = dphi_prev;
                bracketed = true;
                break;
            }
            alpha_prev = alpha;
            phi_prev = phi;
            dphi_prev = dphi;
            alpha *= 2.0;
        }

        if (bracketed && !accepted) {
            for (int z = 0; z < opts.max_line_search_steps; ++z) {
                if (hi_is_finite) {
                    alpha = detail::cubic_step(alpha_lo, phi_lo, dphi_lo, alpha_hi, phi_hi,
                                               dphi_hi);
                } else {
                    alpha = 0.5 * (alpha_lo + alpha_hi);
                }
                if (std::abs(alpha_hi - alpha_lo) <=
                    1e-14 * std::max(1.0, std::abs(alpha_lo)))
                    break;
                eval(alpha);
                if (!std::isfinite(phi)) {
                    alpha_hi = alpha;
                    hi_is_finite = false;
                    continue;
                }
                if (phi > phi0 + c1 * alpha * dphi0 || phi >= phi_lo) {
                    alpha_hi = alpha;
                    phi_hi = phi;
                    dphi_hi = dphi;
                    hi_is_finite = true;
                    continue;
                }
                if (std::abs(dphi) <= -c2 * dphi0) {
                    accepted = true;
                    break;
                }
                if (dphi * (alpha_hi - alpha_lo) >= 0.0) {
                    alpha_hi = alpha_lo;
                    phi_hi = phi_lo;
                    dphi_hi = dphi_lo;
                    hi_is_finite = true;
                }
                alpha_lo = alpha;
                phi_lo = phi;
                dphi_lo = dphi;
            }
            if (!accepted && alpha_lo > 0.0 && phi_lo < phi0) {
                // Zoom stalled; take the best sufficient-decrease point.
                eval(alpha_lo);
                accepted = std::isfinite(phi);
            }
        }

        if (!accepted) return result;  // no further progress possible

        const Eigen::VectorXd step = x_trial - result.x;
        const Eigen::VectorXd grad_change = g_trial - result.gradient;
        result.x = x_trial;
        result.value = phi;
        result.gradient = g_trial;
        result.iterations = iter + 1;

        const double sy = step.dot(grad_change);
        if (sy > 1e-10 * step.norm() * grad_change.norm()) {
            s_hist.push_back(step);
            y_hist.push_back(grad_change);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
    }
    result.converged = result.gradient.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance;
    return result;
}

}  // namespace twingp
