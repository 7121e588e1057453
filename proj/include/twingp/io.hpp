#pragma once

// JSON and CSV serialization for the library's artifacts. Doubles are
// emitted in shortest-round-trip form both in CSV (format_double) and JSON
// (nlohmann's serializer), so identical values produce identical bytes and
// parsing recovers identical bits.

#include <string>
#include <vector>

#include <json.hpp>

#include <twingp/dynamics.hpp>
#include <twingp/format.hpp>
#include <twingp/gp.hpp>
#include <twingp/inversion.hpp>
#include <twingp/selection.hpp>

namespace twingp {

using Json = nlohmann::ordered_json;

inline Json to_json(const Eigen::VectorXd& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

inline Json to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::VectorXd vector_from_json(const Json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

inline Eigen::MatrixXd matrix_from_json(const Json& rows) {
    if (rows.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    return m;
}

// --- nominal system and evolution profile -------------------------------

inline Json system_to_json(const NominalSystem& sys) {
    return Json{{"m0", sys.m0()},         {"c0", sys.c0()},       {"k0", sys.k0()},
                {"omega0", sys.omega0()}, {"zeta0", sys.zeta0()}, {"period0", sys.period0()}};
}

inline NominalSystem system_from_json(const Json& j) {
    return NominalSystem(j.at("m0").get<double>(), j.at("c0").get<double>(),
                         j.at("k0").get<double>());
}

inline Json profile_to_json(const EvolutionProfile& p) {
    return Json{{"alpha_k", p.alpha_k},
                {"eps_k", p.eps_k},
                {"beta_k", p.beta_k},
                {"beta_m", p.beta_m},
                {"eps_m", p.eps_m},
                {"stiffness_evolves", p.stiffness_evolves},
                {"mass_evolves", p.mass_evolves}};
}

inline EvolutionProfile profile_from_json(const Json& j) {
    EvolutionProfile p;
    p.alpha_k = j.at("alpha_k").get<double>();
    p.eps_k = j.at("eps_k").get<double>();
    p.beta_k = j.at("beta_k").get<double>();
    p.beta_m = j.at("beta_m").get<double>();
    p.eps_m = j.at("eps_m").get<double>();
    p.stiffness_evolves = j.at("stiffness_evolves").get<bool>();
    p.mass_evolves = j.at("mass_evolves").get<bool>();
    return p;
}

// --- measurement series --------------------------------------------------

/// A measurement file is self-contained: it embeds the system and profile
/// that produced the series, so downstream stages need no other inputs.
struct MeasurementDocument {
    NominalSystem system;
    EvolutionProfile profile;
    MeasurementSeries series;
};

inline Json measurements_to_json(const MeasurementSeries& series, const EvolutionProfile& profile,
                                 const NominalSystem& sys) {
    Json channels = Json::object();
    const auto names = channel_names(series.kind);
    for (std::size_t c = 0; c < names.size(); ++c) {
        Json col = Json::array();
        for (const double v : series.channels[c]) col.push_back(v);
        channels[names[c]] = std::move(col);
    }
    Json times = Json::array();
    for (const double t : series.slow_times) times.push_back(t);
    return Json{{"schema", "twingp.measurements/1"},
                {"system", system_to_json(sys)},
                {"profile", profile_to_json(profile)},
                {"kind", to_string(series.kind)},
                {"noise_sigma", series.noise_sigma},
                {"seed", series.seed},
                {"slow_times", std::move(times)},
                {"channels", std::move(channels)}};
}

inline MeasurementDocument measurements_from_json(const Json& j) {
    MeasurementDocument doc{system_from_json(j.at("system")), profile_from_json(j.at("profile")),
                            {}};
    doc.series.kind = measurement_kind_from_string(j.at("kind").get<std::string>());
    doc.series.noise_sigma = j.at("noise_sigma").get<double>();
    doc.series.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("slow_times")) doc.series.slow_times.push_back(t.get<double>());
    for (const auto& name : channel_names(doc.series.kind)) {
        std::vector<double> col;
        for (const auto& v : j.at("channels").at(name)) col.push_back(v.get<double>());
        doc.series.channels.push_back(std::move(col));
    }
    return doc;
}

inline std::string measurements_to_csv(const MeasurementSeries& series, double period0) {
    CsvTable table;
    table.header = {"t_s_over_T0"};
    for (const auto& name : channel_names(series.kind)) table.header.push_back(name);
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::vector<std::string> row{format_double(series.slow_times[i] / period0)};
        for (const auto& col : series.channels) row.push_back(format_double(col[i]));
        table.rows.push_back(std::move(row));
    }
    return table.to_string();
}

// --- delta estimates ------------------------------------------------------

struct DeltaDocument {
    NominalSystem system;
    TwinCase twin_case = TwinCase::stiffness;
    DeltaEstimateSeries deltas;
    std::string source;  ///< provenance: the measurement file, or a stage tag
};

inline Json deltas_to_json(const DeltaEstimateSeries& deltas, const NominalSystem& sys,
                           TwinCase twin_case, const std::string& source) {
    Json times = Json::array();
    for (const double t : deltas.slow_times) times.push_back(t);
    Json j{{"schema", "twingp.deltas/1"},
           {"system", system_to_json(sys)},
           {"case", to_string(twin_case)},
           {"source", source},
           {"source_kind", to_string(deltas.source_kind)},
           {"slow_times", std::move(times)}};
    if (!deltas.delta_k_hat.empty()) {
        Json col = Json::array();
        for (const double v : deltas.delta_k_hat) col.push_back(v);
        j["delta_k_hat"] = std::move(col);
    }
    if (!deltas.delta_m_hat.empty()) {
        Json col = Json::array();
        for (const double v : deltas.delta_m_hat) col.push_back(v);
        j["delta_m_hat"] = std::move(col);
    }
    Json flags = Json::array();
    for (const bool f : deltas.flagged) flags.push_back(f);
    j["flagged"] = std::move(flags);
    return j;
}

inline DeltaDocument deltas_from_json(const Json& j) {
    DeltaDocument doc{system_from_json(j.at("system")),
                      twin_case_from_string(j.at("case").get<std::string>()),
                      {},
                      j.at("source").get<std::string>()};
    doc.deltas.source_kind = measurement_kind_from_string(j.at("source_kind").get<std::string>());
    for (const auto& t : j.at("slow_times")) doc.deltas.slow_times.push_back(t.get<double>());
    if (j.contains("delta_k_hat"))
        for (const auto& v : j.at("delta_k_hat")) doc.deltas.delta_k_hat.push_back(v.get<double>());
    if (j.contains("delta_m_hat"))
        for (const auto& v : j.at("delta_m_hat")) doc.deltas.delta_m_hat.push_back(v.get<double>());
    for (const auto& f : j.at("flagged")) doc.deltas.flagged.push_back(f.get<bool>());
    return doc;
}

inline std::string deltas_to_csv(const DeltaEstimateSeries& deltas, double period0) {
    CsvTable table;
    table.header = {"t_s_over_T0", "delta_k_hat", "delta_m_hat", "flagged"};
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        table.rows.push_back(
            {format_double(deltas.slow_times[i] / period0),
             deltas.delta_k_hat.empty() ? "" : format_double(deltas.delta_k_hat[i]),
             deltas.delta_m_hat.empty() ? "" : format_double(deltas.delta_m_hat[i]),
             deltas.flagged[i] ? "1" : "0"});
    }
    return table.to_string();
}

// --- trained emulator -----------------------------------------------------

inline Json kernel_to_json(const Kernel& k) {
    Json j{{"family", to_string(k.family)},
           {"ard", k.ard},
           {"signal_variance", k.signal_variance},
           {"length_scales", to_json(k.length_scales)}};
    if (k.family == KernelFamily::rational_quadratic) j["shape"] = k.shape;
    return j;
}

inline Kernel kernel_from_json(const Json& j) {
    Kernel k;
    k.family = kernel_family_from_string(j.at("family").get<std::string>());
    k.ard = j.at("ard").get<bool>();
    k.signal_variance = j.at("signal_variance").get<double>();
    k.length_scales = vector_from_json(j.at("length_scales"));
    if (j.contains("shape")) k.shape = j.at("shape").get<double>();
    return k;
}

inline Json emulator_to_json(const TrainedEmulator& e) {
    return Json{{"schema", "twingp.emulator/1"},
                {"mean", Json{{"kind", to_string(e.mean().kind)}, {"beta", to_json(e.mean().beta)}}},
                {"kernel", kernel_to_json(e.kernel())},
                {"noise_variance", e.noise_variance()},
                {"train_inputs", to_json(e.train_inputs())},
                {"train_targets", to_json(e.train_targets())},
                {"log_marginal_likelihood", e.log_marginal()},
                {"seed", e.seed()}};
}

inline TrainedEmulator emulator_from_json(const Json& j) {
    MeanBasis mean{mean_kind_from_string(j.at("mean").at("kind").get<std::string>()),
                   vector_from_json(j.at("mean").at("beta"))};
    return TrainedEmulator(std::move(mean), kernel_from_json(j.at("kernel")),
                           j.at("noise_variance").get<double>(),
                           matrix_from_json(j.at("train_inputs")),
                           vector_from_json(j.at("train_targets")),
                           j.at("seed").get<std::uint64_t>());
}

// --- selection report -----------------------------------------------------

/// Wall times are intentionally left out of the persisted report so that
/// reruns with the same seed produce identical bytes.
inline Json report_to_json(const ModelSelectionReport& report) {
    Json candidates = Json::array();
    for (const auto& rec : report.candidates) {
        Json c{{"mean", to_string(rec.spec.mean)},
               {"kernel", to_string(rec.spec.kernel)},
               {"ard", rec.spec.ard},
               {"name", rec.spec.name()},
               {"param_count", rec.param_count},
               {"n", rec.n},
               {"seed", rec.seed}};
        if (rec.ok()) {
            c["lml"] = rec.lml;
            c["bic"] = rec.bic;
            const TrainedEmulator& e = *rec.emulator;
            c["fitted"] = Json{{"beta", to_json(e.mean().beta)},
                               {"kernel", kernel_to_json(e.kernel())},
                               {"noise_variance", e.noise_variance()}};
        } else {
            c["error"] = rec.error;
        }
        candidates.push_back(std::move(c));
    }
    return Json{{"schema", "twingp.selection/1"},
                {"n", report.n},
                {"variant", to_string(report.variant)},
                {"seed", report.seed},
                {"winner_index", report.winner_index},
                {"winner", report.winner().spec.name()},
                {"candidates", std::move(candidates)}};
}

/// Fixed-width text table of the candidate scores, winner marked.
inline std::string report_to_text(const ModelSelectionReport& report) {
    std::string out = "model selection over " + std::to_string(report.candidates.size()) +
                      " candidates, n = " + std::to_string(report.n) + "\n";
    std::size_t width = 4;
    for (const auto& rec : report.candidates) width = std::max(width, rec.spec.name().size());
    for (std::size_t i = 0; i < report.candidates.size(); ++i) {
        const auto& rec = report.candidates[i];
        std::string line = (i == report.winner_index) ? "* " : "  ";
        line += rec.spec.name();
        line.append(width + 2 - rec.spec.name().size(), ' ');
        line += "k=" + std::to_string(rec.param_count);
        if (rec.ok()) {
            line += "  lml=" + format_double(rec.lml) + "  bic=" + format_double(rec.bic);
        } else {
            line += "  failed: " + rec.error;
        }
        out += line + "\n";
    }
    return out;
}

/// Serialize with the project's round-trip number formatting. nlohmann's own
/// dump() already emits shortest-round-trip doubles; this wrapper pins the
/// indentation so artifact bytes are stable.
inline std::string json_to_string(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace twingp
