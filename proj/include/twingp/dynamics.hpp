#pragma once

// Physical twin of a damped single-degree-of-freedom oscillator whose mass
// and stiffness drift on a slow service timescale, plus the simulated sensor
// channel (noisy normalized eigenvalue measurements on a slow-time grid).

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <twingp/errors.hpp>
#include <twingp/rng.hpp>

namespace twingp {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Which slow-time channels evolve and which closed-form inversion applies.
enum class TwinCase { stiffness, mass, joint };

inline const char* to_string(TwinCase c) {
    switch (c) {
        case TwinCase::stiffness: return "stiffness";
        case TwinCase::mass: return "mass";
        case TwinCase::joint: return "joint";
    }
    throw ArgumentError("unknown twin case");
}

inline TwinCase twin_case_from_string(const std::string& s) {
    if (s == "stiffness") return TwinCase::stiffness;
    if (s == "mass") return TwinCase::mass;
    if (s == "joint") return TwinCase::joint;
    throw ArgumentError("unknown twin case '" + s + "' (expected stiffness|mass|joint)");
}

/// Verified initial model m0*u'' + c0*u' + k0*u = f at the start of service
/// life, with the derived modal quantities kept consistent by construction.
class NominalSystem {
public:
    NominalSystem(double mass, double damping, double stiffness)
        : m0_(mass), c0_(damping), k0_(stiffness) {
        if (!(m0_ > 0.0)) throw ArgumentError("nominal mass must be positive");
        if (!(k0_ > 0.0)) throw ArgumentError("nominal stiffness must be positive");
        if (!(c0_ >= 0.0)) throw ArgumentError("nominal damping must be nonnegative");
        omega0_ = std::sqrt(k0_ / m0_);
        zeta0_ = c0_ / (2.0 * std::sqrt(k0_ * m0_));
        if (!(zeta0_ < 1.0))
            throw ArgumentError("nominal system must be underdamped (zeta0 < 1)");
        period0_ = 2.0 * kPi / omega0_;
    }

    /// Builds the system from a damping ratio instead of a raw coefficient.
    static NominalSystem from_damping_ratio(double mass, double stiffness, double zeta) {
        if (!(mass > 0.0) || !(stiffness > 0.0))
            throw ArgumentError("nominal mass and stiffness must be positive");
        return NominalSystem(mass, 2.0 * zeta * std::sqrt(stiffness * mass), stiffness);
    }

    double m0() const { return m0_; }
    double c0() const { return c0_; }
    double k0() const { return k0_; }
    double omega0() const { return omega0_; }
    double zeta0() const { return zeta0_; }
    double period0() const { return period0_; }

private:
    double m0_, c0_, k0_;
    double omega0_, zeta0_, period0_;
};

/// Parametric ground truth for the slow-time drift of stiffness and mass.
/// Defaults are the worked-example constants: an exponentially decaying,
/// gently oscillating stiffness loss and a sawtooth mass cycle.
struct EvolutionProfile {
    double alpha_k = 4e-4;  ///< stiffness envelope decay rate (1/slow-time)
    double eps_k = 0.05;    ///< stiffness oscillation amplitude
    double beta_k = 2e-2;   ///< stiffness oscillation frequency (1/slow-time)
    double beta_m = 0.15;   ///< mass sawtooth frequency (1/slow-time)
    double eps_m = 0.25;    ///< mass sawtooth amplitude
    bool stiffness_evolves = true;
    bool mass_evolves = true;

    static EvolutionProfile for_case(TwinCase c) {
        EvolutionProfile p;
        p.stiffness_evolves = (c != TwinCase::mass);
        p.mass_evolves = (c != TwinCase::stiffness);
        return p;
    }
};

/// 2*pi-periodic sawtooth: x/pi on [-pi, pi), rising, with the jump at odd
/// multiples of pi.
inline double sawtooth(double x) {
    const double two_pi = 2.0 * kPi;
    const double wrapped = x - two_pi * std::floor((x + kPi) / two_pi);
    return wrapped / kPi;
}

/// Fractional stiffness deviation at slow time t_s.
inline double delta_k_true(double t_s, const EvolutionProfile& profile) {
    if (!profile.stiffness_evolves) return 0.0;
    return std::exp(-profile.alpha_k * t_s) *
               (1.0 + profile.eps_k * std::cos(profile.beta_k * t_s)) / (1.0 + profile.eps_k) -
           1.0;
}

/// Fractional mass deviation at slow time t_s. The phase shift puts a rising
/// zero crossing at t_s = pi/beta_m, so service starts at -eps_m.
inline double delta_m_true(double t_s, const EvolutionProfile& profile) {
    if (!profile.mass_evolves) return 0.0;
    return profile.eps_m * sawtooth(profile.beta_m * (t_s - kPi / profile.beta_m));
}

/// Principal eigenvalue (positive imaginary part) of the evolved system at
/// t_s; the full pair is this value and its complex conjugate. Disabled
/// channels contribute zero deviation.
inline std::complex<double> eigenvalue(double t_s, const EvolutionProfile& profile,
                                       const NominalSystem& sys) {
    const double stiff = 1.0 + delta_k_true(t_s, profile);
    const double mass = 1.0 + delta_m_true(t_s, profile);
    const double zeta0 = sys.zeta0();
    if (!(stiff > 0.0) || !(mass > 0.0) || !(stiff * mass > zeta0 * zeta0))
        throw OverdampedError("system is not underdamped at t_s = " + std::to_string(t_s));
    const double omega_s = sys.omega0() * std::sqrt(stiff / mass);
    const double zeta_s = zeta0 / std::sqrt(mass * stiff);
    const double omega_ds = omega_s * std::sqrt(1.0 - zeta_s * zeta_s);
    return {-omega_s * zeta_s, omega_ds};
}

/// Uniform grid of n_points slow times on [0, horizon].
inline std::vector<double> slow_time_grid(int n_points, double horizon) {
    if (n_points < 2) throw ArgumentError("slow_time_grid needs at least 2 points");
    if (!(horizon > 0.0)) throw ArgumentError("slow_time_grid needs a positive horizon");
    std::vector<double> grid(static_cast<std::size_t>(n_points));
    const double step = horizon / (n_points - 1);
    for (int i = 0; i < n_points; ++i) grid[static_cast<std::size_t>(i)] = i * step;
    grid.back() = horizon;
    return grid;
}

/// What the sensor reports per slow-time sample.
enum class MeasurementKind { damped_frequency, complex_eigenvalue };

inline const char* to_string(MeasurementKind k) {
    switch (k) {
        case MeasurementKind::damped_frequency: return "damped_frequency";
        case MeasurementKind::complex_eigenvalue: return "complex_eigenvalue";
    }
    throw ArgumentError("unknown measurement kind");
}

inline MeasurementKind measurement_kind_from_string(const std::string& s) {
    if (s == "damped_frequency") return MeasurementKind::damped_frequency;
    if (s == "complex_eigenvalue") return MeasurementKind::complex_eigenvalue;
    throw ArgumentError("unknown measurement kind '" + s + "'");
}

/// The measurement kind each twin case relies on.
inline MeasurementKind measurement_kind_for(TwinCase c) {
    return c == TwinCase::joint ? MeasurementKind::complex_eigenvalue
                                : MeasurementKind::damped_frequency;
}

inline std::vector<std::string> channel_names(MeasurementKind kind) {
    if (kind == MeasurementKind::damped_frequency) return {"omega_d_norm"};
    return {"re_lambda_norm", "im_lambda_norm"};
}

/// Per-channel noise scale: the magnitude of the channel's nominal value, so
/// that one sigma means the same relative sensor precision on every channel.
/// For the damped frequency this is omega_d0/omega0 = sqrt(1 - zeta0^2); the
/// real eigenvalue part has nominal magnitude zeta0.
inline std::vector<double> channel_noise_scales(MeasurementKind kind, const NominalSystem& sys) {
    const double damped = std::sqrt(1.0 - sys.zeta0() * sys.zeta0());
    if (kind == MeasurementKind::damped_frequency) return {damped};
    return {sys.zeta0(), damped};
}

/// Noisy sensor series on a slow-time grid. All channels are normalized by
/// the nominal omega0; noise is added to the normalized values.
struct MeasurementSeries {
    std::vector<double> slow_times;               ///< raw slow times, strictly increasing
    MeasurementKind kind = MeasurementKind::damped_frequency;
    std::vector<std::vector<double>> channels;    ///< one column per scalar channel
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    std::size_t size() const { return slow_times.size(); }
};

/// Samples the exact normalized eigenvalue quantity on the grid and adds
/// i.i.d. zero-mean Gaussian noise per scalar channel, with standard
/// deviation sigma times the channel's nominal magnitude (see
/// channel_noise_scales). Per grid point the channels are perturbed in
/// declaration order, which pins the sequence of draws for a given seed.
inline MeasurementSeries sample_measurements(const std::vector<double>& grid,
                                             const EvolutionProfile& profile,
                                             const NominalSystem& sys, MeasurementKind kind,
                                             double noise_sigma, std::uint64_t seed) {
    if (grid.empty()) throw ArgumentError("sample_measurements: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw ArgumentError("sample_measurements: grid must be strictly increasing");
    if (!(noise_sigma >= 0.0)) throw ArgumentError("sample_measurements: negative noise sigma");

    MeasurementSeries series;
    series.slow_times = grid;
    series.kind = kind;
    series.noise_sigma = noise_sigma;
    series.seed = seed;
    const std::vector<double> scales = channel_noise_scales(kind, sys);
    series.channels.resize(scales.size());
    for (auto& col : series.channels) col.reserve(grid.size());

    Rng rng(seed);
    for (const double t : grid) {
        const std::complex<double> lambda = eigenvalue(t, profile, sys) / sys.omega0();
        if (kind == MeasurementKind::damped_frequency) {
            series.channels[0].push_back(lambda.imag() +
                                         rng.normal(0.0, noise_sigma * scales[0]));
        } else {
            series.channels[0].push_back(lambda.real() +
                                         rng.normal(0.0, noise_sigma * scales[0]));
            series.channels[1].push_back(lambda.imag() +
                                         rng.normal(0.0, noise_sigma * scales[1]));
        }
    }
    return series;
}

}  // namespace twingp
