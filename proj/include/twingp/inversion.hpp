#pragma once

// Closed-form inversion of normalized eigenvalue measurements into fractional
// stiffness/mass deviations. These point estimates are the training targets
// for the emulator. All distances are signed, nominal minus measured, so that
// both increases and decreases of a parameter are representable.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <twingp/dynamics.hpp>
#include <twingp/errors.hpp>

namespace twingp {

/// Per-slow-time deviation estimates recovered from one measurement series.
/// A channel vector is empty when that channel is not estimated by the case.
struct DeltaEstimateSeries {
    std::vector<double> slow_times;
    MeasurementKind source_kind = MeasurementKind::damped_frequency;
    std::vector<double> delta_k_hat;
    std::vector<double> delta_m_hat;
    /// True where an out-of-domain sample had its radicand clamped to zero.
    std::vector<bool> flagged;

    std::size_t size() const { return slow_times.size(); }
};

/// Stiffness deviation from a normalized damped frequency (stiffness-only
/// twin). Exact inverse of the forward model: with d1 = sqrt(1-zeta0^2) - w
/// the estimate -d1*(2*sqrt(1-zeta0^2) - d1) reduces to w^2 - (1-zeta0^2).
inline double invert_stiffness(double omega_ds_norm, const NominalSystem& sys) {
    if (!(omega_ds_norm > 0.0))
        throw ArgumentError("invert_stiffness: measured frequency must be positive");
    const double c = std::sqrt(1.0 - sys.zeta0() * sys.zeta0());
    const double d1 = c - omega_ds_norm;
    return -d1 * (2.0 * c - d1);
}

namespace detail {

struct ClampedEstimate {
    double value = 0.0;
    bool clamped = false;
};

/// Mass inversion with the out-of-domain policy applied: a negative radicand
/// (inconsistent noisy measurement) is clamped to zero and flagged.
inline ClampedEstimate invert_mass_clamped(double omega_ds_norm, double zeta0) {
    const double c = std::sqrt(1.0 - zeta0 * zeta0);
    const double d2 = c - omega_ds_norm;
    const double root = c - d2;  // == omega_ds_norm
    if (std::abs(root) <= 1e-12)
        throw SingularInversionError("invert_mass: measured frequency too close to zero");
    const double denom = 2.0 * root * root;
    const double z2 = zeta0 * zeta0;
    double radicand = 1.0 - 4.0 * d2 * d2 * z2 + 8.0 * d2 * c * z2 - 4.0 * z2 + 4.0 * z2 * z2;
    ClampedEstimate out;
    if (radicand < 0.0) {
        radicand = 0.0;
        out.clamped = true;
    }
    out.value = (-2.0 * d2 * d2 + 4.0 * d2 * c - 1.0 + 2.0 * z2 + std::sqrt(radicand)) / denom;
    return out;
}

}  // namespace detail

/// Mass deviation from a normalized damped frequency (mass-only twin), using
/// the principal root of the quadratic in 1 + delta_m.
inline double invert_mass(double omega_ds_norm, const NominalSystem& sys) {
    if (!(omega_ds_norm > 0.0))
        throw ArgumentError("invert_mass: measured frequency must be positive");
    const auto est = detail::invert_mass_clamped(omega_ds_norm, sys.zeta0());
    if (est.clamped)
        throw DomainError("invert_mass: measurement inconsistent with the forward model");
    return est.value;
}

struct JointDeltas {
    double delta_m = 0.0;
    double delta_k = 0.0;
};

/// Joint mass and stiffness deviations from the normalized complex
/// eigenvalue. Distances are d_re = (Re lambda0 - Re lambda_s)/omega0 and
/// d_im = sqrt(1-zeta0^2) - Im lambda_s/omega0; the mass estimate is
/// -d_re/(zeta0 + d_re) and the stiffness estimate follows from substituting
/// the recovered mass back into the damped-frequency distance.
inline JointDeltas invert_joint(double re_lambda_norm, double im_lambda_norm,
                                const NominalSystem& sys) {
    if (!(im_lambda_norm > 0.0))
        throw ArgumentError("invert_joint: imaginary part must be positive");
    const double zeta0 = sys.zeta0();
    const double c = std::sqrt(1.0 - zeta0 * zeta0);
    const double d_re = -zeta0 - re_lambda_norm;
    const double d_im = c - im_lambda_norm;
    const double denom = zeta0 + d_re;  // == -Re lambda_s / omega0
    if (std::abs(denom) <= 1e-12)
        throw SingularInversionError("invert_joint: zeta0 + d_re vanishes, deltas unidentifiable");
    JointDeltas out;
    out.delta_m = -d_re / denom;
    out.delta_k = (zeta0 * d_re * d_re + zeta0 * d_im * d_im - 2.0 * zeta0 * c * d_im -
                   (1.0 - 2.0 * zeta0 * zeta0) * d_re) /
                  denom;
    return out;
}

/// Inverts a whole measurement series for the given twin case. Out-of-domain
/// mass samples are clamped and flagged rather than dropped, so the training
/// grid stays complete; the emulator's noise term absorbs them.
inline DeltaEstimateSeries invert_series(const MeasurementSeries& series,
                                         const NominalSystem& sys, TwinCase twin_case) {
    if (series.kind != measurement_kind_for(twin_case))
        throw ArgumentError(std::string("invert_series: case '") + to_string(twin_case) +
                            "' needs kind '" + to_string(measurement_kind_for(twin_case)) + "'");
    const std::size_t n = series.size();
    for (const auto& col : series.channels)
        if (col.size() != n) throw ArgumentError("invert_series: ragged measurement series");

    DeltaEstimateSeries out;
    out.slow_times = series.slow_times;
    out.source_kind = series.kind;
    out.flagged.assign(n, false);
    switch (twin_case) {
        case TwinCase::stiffness:
            out.delta_k_hat.reserve(n);
            for (std::size_t i = 0; i < n; ++i)
                out.delta_k_hat.push_back(invert_stiffness(series.channels[0][i], sys));
            break;
        case TwinCase::mass:
            out.delta_m_hat.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (!(series.channels[0][i] > 0.0))
                    throw ArgumentError("invert_series: nonpositive measured frequency");
                const auto est = detail::invert_mass_clamped(series.channels[0][i], sys.zeta0());
                out.delta_m_hat.push_back(est.value);
                out.flagged[i] = est.clamped;
            }
            break;
        case TwinCase::joint:
            out.delta_k_hat.reserve(n);
            out.delta_m_hat.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                const JointDeltas d =
                    invert_joint(series.channels[0][i], series.channels[1][i], sys);
                out.delta_m_hat.push_back(d.delta_m);
                out.delta_k_hat.push_back(d.delta_k);
            }
            break;
    }
    return out;
}

}  // namespace twingp
