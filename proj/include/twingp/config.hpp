#pragma once

// Declarative scenario configuration: an INI-style text file (key = value
// with [section] headers) with every worked-example default built in, so a
// bare `case = stiffness` runs the reference stiffness scenario. Validation
// is not fail-fast; it reports every violation at once.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <twingp/dynamics.hpp>
#include <twingp/errors.hpp>
#include <twingp/format.hpp>
#include <twingp/gp.hpp>
#include <twingp/selection.hpp>

namespace twingp {

struct ScenarioConfig {
    TwinCase twin_case = TwinCase::stiffness;
    std::uint64_t seed = 0;
    std::string out_dir = "twingp_run";

    // nominal system (c0 follows from the damping ratio)
    double m0 = 1.0;
    double k0 = 4.0 * kPi * kPi;  // omega0 = 2*pi, so T0 = 1 slow-time unit
    double zeta0 = 0.05;

    EvolutionProfile profile;  // enabled channels are derived from the case

    // sampling; negative values mean "use the case default"
    int n_points = -1;
    double horizon = -1.0;
    double noise_sigma = 0.0;

    // fit
    int n_starts = 8;
    double tolerance = 1e-5;
    int max_iterations = 200;

    // selection
    std::vector<MeanKind> pool_means = {MeanKind::constant, MeanKind::linear,
                                        MeanKind::quadratic};
    std::vector<std::pair<KernelFamily, bool>> pool_kernels = kernel_pool_order();
    bool textbook_bic = false;
    unsigned jobs = 1;

    // prediction grid
    int grid_points = 500;
    double extrapolation = 0.1;

    // matrix sweep axes
    std::vector<int> matrix_points;
    std::vector<double> matrix_sigmas;

    NominalSystem system() const { return NominalSystem::from_damping_ratio(m0, k0, zeta0); }

    std::vector<CandidateSpec> pool() const {
        std::vector<CandidateSpec> out;
        for (const MeanKind mean : pool_means)
            for (const auto& [family, ard] : pool_kernels) out.push_back({mean, family, ard});
        return out;
    }

    FitOptions fit_options() const {
        FitOptions o;
        o.n_starts = n_starts;
        o.gradient_tolerance = tolerance;
        o.max_iterations = max_iterations;
        o.jobs = jobs;
        return o;
    }

    BicVariant bic_variant() const {
        return textbook_bic ? BicVariant::textbook : BicVariant::as_printed;
    }

    /// Case defaults: 30 points over one stiffness-oscillation period for the
    /// stiffness twin; 100/37 points over two sawtooth periods for mass/joint.
    int default_points() const {
        switch (twin_case) {
            case TwinCase::stiffness: return 30;
            case TwinCase::mass: return 100;
            case TwinCase::joint: return 37;
        }
        return 30;
    }

    double default_horizon() const {
        return twin_case == TwinCase::stiffness ? 2.0 * kPi / profile.beta_k
                                                : 4.0 * kPi / profile.beta_m;
    }
};

struct ValidationResult {
    std::optional<ScenarioConfig> config;
    std::vector<std::string> errors;

    bool ok() const { return errors.empty(); }
    const ScenarioConfig& value() const {
        if (!config) throw ConfigError("configuration is invalid");
        return *config;
    }
};

namespace detail {

struct IniEntry {
    std::string key;  // "section.name", or just "name" for the top level
    std::string value;
    int line = 0;
};

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

inline std::vector<IniEntry> parse_ini(const std::string& text, std::vector<std::string>& errors) {
    std::vector<IniEntry> entries;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back("line " + std::to_string(line_no) + ": unterminated section header");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(line_no) + ": expected key = value");
            continue;
        }
        IniEntry entry;
        entry.key = section.empty() ? trim(line.substr(0, eq))
                                    : section + "." + trim(line.substr(0, eq));
        entry.value = trim(line.substr(eq + 1));
        entry.line = line_no;
        entries.push_back(std::move(entry));
    }
    return entries;
}

class ConfigReader {
public:
    ConfigReader(const std::vector<IniEntry>& entries, std::vector<std::string>& errors)
        : errors_(errors) {
        for (const auto& e : entries) {
            if (values_.count(e.key))
                errors_.push_back("line " + std::to_string(e.line) + ": duplicate key '" + e.key + "'");
            values_[e.key] = e;
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void take_string(const std::string& key, std::string& out) {
        const auto it = values_.find(key);
        if (it == values_.end()) return;
        out = it->second.value;
        consumed_.insert(key);
    }

    void take_double(const std::string& key, double& out) {
        with_value(key, [&](const IniEntry& e) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(e.value, &pos);
                if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
                out = v;
            } catch (const std::exception&) {
                fail(e, "not a number");
            }
        });
    }

    void take_int(const std::string& key, int& out) {
        with_value(key, [&](const IniEntry& e) {
            try {
                std::size_t pos = 0;
                const long v = std::stol(e.value, &pos);
                if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
                out = static_cast<int>(v);
            } catch (const std::exception&) {
                fail(e, "not an integer");
            }
        });
    }

    void take_uint64(const std::string& key, std::uint64_t& out) {
        with_value(key, [&](const IniEntry& e) {
            try {
                std::size_t pos = 0;
                const unsigned long long v = std::stoull(e.value, &pos);
                if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
                out = v;
            } catch (const std::exception&) {
                fail(e, "not a nonnegative integer");
            }
        });
    }

    void take_bool(const std::string& key, bool& out) {
        with_value(key, [&](const IniEntry& e) {
            if (e.value == "true" || e.value == "1")
                out = true;
            else if (e.value == "false" || e.value == "0")
                out = false;
            else
                fail(e, "not a boolean (true/false)");
        });
    }

    template <typename Fn>
    void take_custom(const std::string& key, Fn&& fn) {
        with_value(key, std::forward<Fn>(fn));
    }

    void report_unknown_keys() {
        for (const auto& [key, entry] : values_)
            if (!consumed_.count(key))
                errors_.push_back("line " + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }

    void fail(const IniEntry& e, const std::string& why) {
        errors_.push_back("line " + std::to_string(e.line) + ": key '" + e.key + "': " + why);
    }

private:
    template <typename Fn>
    void with_value(const std::string& key, Fn&& fn) {
        const auto it = values_.find(key);
        if (it == values_.end()) return;
        consumed_.insert(key);
        fn(it->second);
    }

    std::map<std::string, IniEntry> values_;
    std::set<std::string> consumed_;
    std::vector<std::string>& errors_;
};

inline std::optional<MeanKind> mean_from_display(const std::string& s) {
    if (s == "Constant") return MeanKind::constant;
    if (s == "Linear") return MeanKind::linear;
    if (s == "Quadratic") return MeanKind::quadratic;
    return std::nullopt;
}

inline std::optional<std::pair<KernelFamily, bool>> kernel_from_display(const std::string& s) {
    for (const auto& entry : kernel_pool_order()) {
        Kernel k;
        k.family = entry.first;
        k.ard = entry.second;
        if (k.display_name() == s) return entry;
    }
    return std::nullopt;
}

}  // namespace detail

/// Constraint checks shared by file validation and programmatic use; appends
/// one message per violation.
inline void validate_scenario(const ScenarioConfig& cfg, std::vector<std::string>& errors) {
    if (!(cfg.m0 > 0.0)) errors.push_back("system.m0 must be positive");
    if (!(cfg.k0 > 0.0)) errors.push_back("system.k0 must be positive");
    if (!(cfg.zeta0 >= 0.0 && cfg.zeta0 < 1.0))
        errors.push_back("system.zeta0: underdamped required (0 <= zeta0 < 1)");
    if (!(cfg.profile.eps_k > -1.0)) errors.push_back("profile.eps_k must exceed -1");
    if (!(cfg.profile.alpha_k >= 0.0)) errors.push_back("profile.alpha_k must be nonnegative");
    if (!(cfg.profile.beta_k > 0.0)) errors.push_back("profile.beta_k must be positive");
    if (!(cfg.profile.beta_m > 0.0)) errors.push_back("profile.beta_m must be positive");
    if (cfg.n_points < 2) errors.push_back("sampling.n_points: need at least 2 grid points");
    if (!(cfg.horizon > 0.0)) errors.push_back("sampling.horizon must be positive");
    if (!(cfg.noise_sigma >= 0.0)) errors.push_back("sampling.sigma must be nonnegative");
    if (cfg.n_starts < 1) errors.push_back("fit.starts must be at least 1");
    if (!(cfg.tolerance > 0.0)) errors.push_back("fit.tolerance must be positive");
    if (cfg.max_iterations < 1) errors.push_back("fit.max_iterations must be at least 1");
    if (cfg.pool_means.empty()) errors.push_back("selection.means must not be empty");
    if (cfg.pool_kernels.empty()) errors.push_back("selection.kernels must not be empty");
    if (cfg.grid_points < 2) errors.push_back("predict.grid_points: need at least 2");
    if (!(cfg.extrapolation >= 0.0)) errors.push_back("predict.extrapolation must be nonnegative");
    for (const int p : cfg.matrix_points)
        if (p < 2) errors.push_back("matrix.points entries must be at least 2");
    for (const double s : cfg.matrix_sigmas)
        if (!(s >= 0.0)) errors.push_back("matrix.sigmas entries must be nonnegative");

    if (!errors.empty()) return;

    // With the numbers sane, check the module preconditions over the horizon:
    // physical positivity and the underdamped region.
    const double zeta_sq = cfg.zeta0 * cfg.zeta0;
    for (int i = 0; i <= 2048; ++i) {
        const double t = cfg.horizon * (1.0 + cfg.extrapolation) * i / 2048.0;
        const double stiff = 1.0 + delta_k_true(t, cfg.profile);
        const double mass = 1.0 + delta_m_true(t, cfg.profile);
        if (!(stiff > 0.0) || !(mass > 0.0)) {
            errors.push_back("profile violates positivity of mass/stiffness within the horizon");
            return;
        }
        if (!(stiff * mass > zeta_sq)) {
            errors.push_back("profile leaves the underdamped region within the horizon");
            return;
        }
    }
}

/// Parses and resolves a configuration from text. Defaults fill every field
/// not present; all violations are collected rather than reported one by one.
/// Overrides (e.g. command-line flags) replace same-named entries before
/// resolution, so case-dependent defaulting sees them.
inline ValidationResult resolve_config(
    const std::string& text,
    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    ValidationResult result;
    auto& errors = result.errors;
    auto entries = detail::parse_ini(text, errors);
    for (const auto& [key, value] : overrides) {
        std::erase_if(entries, [&](const detail::IniEntry& e) { return e.key == key; });
        entries.push_back({key, value, 0});
    }
    detail::ConfigReader reader(entries, errors);

    ScenarioConfig cfg;
    reader.take_custom("case", [&](const detail::IniEntry& e) {
        try {
            cfg.twin_case = twin_case_from_string(e.value);
        } catch (const ArgumentError& err) {
            reader.fail(e, err.what());
        }
    });
    reader.take_uint64("seed", cfg.seed);
    reader.take_string("out", cfg.out_dir);

    reader.take_double("system.m0", cfg.m0);
    reader.take_double("system.k0", cfg.k0);
    reader.take_double("system.zeta0", cfg.zeta0);

    reader.take_double("profile.alpha_k", cfg.profile.alpha_k);
    reader.take_double("profile.eps_k", cfg.profile.eps_k);
    reader.take_double("profile.beta_k", cfg.profile.beta_k);
    reader.take_double("profile.beta_m", cfg.profile.beta_m);
    reader.take_double("profile.eps_m", cfg.profile.eps_m);

    reader.take_int("sampling.n_points", cfg.n_points);
    reader.take_double("sampling.horizon", cfg.horizon);
    reader.take_double("sampling.sigma", cfg.noise_sigma);

    reader.take_int("fit.starts", cfg.n_starts);
    reader.take_double("fit.tolerance", cfg.tolerance);
    reader.take_int("fit.max_iterations", cfg.max_iterations);

    reader.take_custom("selection.means", [&](const detail::IniEntry& e) {
        if (e.value == "all") return;
        cfg.pool_means.clear();
        for (const auto& item : detail::split(e.value, ',')) {
            if (const auto mean = detail::mean_from_display(item))
                cfg.pool_means.push_back(*mean);
            else
                reader.fail(e, "unknown mean '" + item + "'");
        }
    });
    reader.take_custom("selection.kernels", [&](const detail::IniEntry& e) {
        if (e.value == "all") return;
        cfg.pool_kernels.clear();
        for (const auto& item : detail::split(e.value, ',')) {
            if (const auto kernel = detail::kernel_from_display(item))
                cfg.pool_kernels.push_back(*kernel);
            else
                reader.fail(e, "unknown kernel '" + item + "'");
        }
    });
    reader.take_bool("selection.textbook_bic", cfg.textbook_bic);
    reader.take_custom("selection.jobs", [&](const detail::IniEntry& e) {
        int jobs = 1;
        try {
            jobs = std::stoi(e.value);
        } catch (const std::exception&) {
            reader.fail(e, "not an integer");
            return;
        }
        if (jobs < 1)
            reader.fail(e, "jobs must be at least 1");
        else
            cfg.jobs = static_cast<unsigned>(jobs);
    });

    reader.take_int("predict.grid_points", cfg.grid_points);
    reader.take_double("predict.extrapolation", cfg.extrapolation);

    reader.take_custom("matrix.points", [&](const detail::IniEntry& e) {
        for (const auto& item : detail::split(e.value, ',')) {
            try {
                cfg.matrix_points.push_back(std::stoi(item));
            } catch (const std::exception&) {
                reader.fail(e, "not an integer list");
                return;
            }
        }
    });
    reader.take_custom("matrix.sigmas", [&](const detail::IniEntry& e) {
        for (const auto& item : detail::split(e.value, ',')) {
            try {
                cfg.matrix_sigmas.push_back(std::stod(item));
            } catch (const std::exception&) {
                reader.fail(e, "not a number list");
                return;
            }
        }
    });

    reader.report_unknown_keys();

    // Resolve case-dependent pieces before the constraint checks. Explicitly
    // configured values are never replaced by defaults, so bad explicit
    // values surface as errors.
    cfg.profile.stiffness_evolves = (cfg.twin_case != TwinCase::mass);
    cfg.profile.mass_evolves = (cfg.twin_case != TwinCase::stiffness);
    if (!reader.has("sampling.n_points")) cfg.n_points = cfg.default_points();
    if (!reader.has("sampling.horizon") && cfg.profile.beta_k > 0.0 && cfg.profile.beta_m > 0.0)
        cfg.horizon = cfg.default_horizon();

    validate_scenario(cfg, errors);
    if (errors.empty()) result.config = cfg;
    return result;
}

inline ValidationResult validate_config_text(
    const std::string& text,
    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    return resolve_config(text, overrides);
}

/// Reads, parses and fully validates a configuration file.
inline ValidationResult validate_config(const std::filesystem::path& path) {
    return resolve_config(read_text_file(path));
}

/// Canonical text form of a resolved configuration. Every field is written,
/// in a fixed order, with round-trip number formatting; re-parsing yields an
/// identical configuration.
inline std::string config_to_text(const ScenarioConfig& cfg) {
    std::string out;
    out += "case = " + std::string(to_string(cfg.twin_case)) + "\n";
    out += "seed = " + format_uint64(cfg.seed) + "\n";
    out += "out = " + cfg.out_dir + "\n\n";
    out += "[system]\n";
    out += "m0 = " + format_double(cfg.m0) + "\n";
    out += "k0 = " + format_double(cfg.k0) + "\n";
    out += "zeta0 = " + format_double(cfg.zeta0) + "\n\n";
    out += "[profile]\n";
    out += "alpha_k = " + format_double(cfg.profile.alpha_k) + "\n";
    out += "eps_k = " + format_double(cfg.profile.eps_k) + "\n";
    out += "beta_k = " + format_double(cfg.profile.beta_k) + "\n";
    out += "beta_m = " + format_double(cfg.profile.beta_m) + "\n";
    out += "eps_m = " + format_double(cfg.profile.eps_m) + "\n\n";
    out += "[sampling]\n";
    out += "n_points = " + format_int(cfg.n_points) + "\n";
    out += "horizon = " + format_double(cfg.horizon) + "\n";
    out += "sigma = " + format_double(cfg.noise_sigma) + "\n\n";
    out += "[fit]\n";
    out += "starts = " + format_int(cfg.n_starts) + "\n";
    out += "tolerance = " + format_double(cfg.tolerance) + "\n";
    out += "max_iterations = " + format_int(cfg.max_iterations) + "\n\n";
    out += "[selection]\n";
    std::string means;
    for (const auto mean : cfg.pool_means) {
        if (!means.empty()) means += ",";
        means += display_name(mean);
    }
    out += "means = " + means + "\n";
    std::string kernels;
    for (const auto& [family, ard] : cfg.pool_kernels) {
        Kernel k;
        k.family = family;
        k.ard = ard;
        if (!kernels.empty()) kernels += ",";
        kernels += k.display_name();
    }
    out += "kernels = " + kernels + "\n";
    out += "textbook_bic = " + std::string(cfg.textbook_bic ? "true" : "false") + "\n";
    out += "jobs = " + format_uint64(cfg.jobs) + "\n\n";
    out += "[predict]\n";
    out += "grid_points = " + format_int(cfg.grid_points) + "\n";
    out += "extrapolation = " + format_double(cfg.extrapolation) + "\n";
    if (!cfg.matrix_points.empty() || !cfg.matrix_sigmas.empty()) {
        out += "\n[matrix]\n";
        std::string points;
        for (const int p : cfg.matrix_points) {
            if (!points.empty()) points += ",";
            points += format_int(p);
        }
        if (!points.empty()) out += "points = " + points + "\n";
        std::string sigmas;
        for (const double s : cfg.matrix_sigmas) {
            if (!sigmas.empty()) sigmas += ",";
            sigmas += format_double(s);
        }
        if (!sigmas.empty()) out += "sigmas = " + sigmas + "\n";
    }
    return out;
}

}  // namespace twingp
