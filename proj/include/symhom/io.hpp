#pragma once

// The artifact's only I/O boundary: run-config parsing with strict key
// validation, CSV/JSON serialization with the conventions manifest embedded
// in every output, and a content-hash keyed stage cache for idempotent runs.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "symhom/core.hpp"
#include "symhom/measures.hpp"
#include "symhom/models.hpp"
#include "symhom/spectral.hpp"
#include "symhom/subdiff.hpp"
#include "symhom/verify.hpp"

namespace symhom::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting helpers (deterministic, locale-free)
// ---------------------------------------------------------------------------

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline json conventions_json() {
    Conventions c;
    c.orientation = calibrated_orientation().sign;
    return json{{"orientation", calibrated_orientation().tag()},
                {"liouville_form", c.liouville},
                {"vector_field", c.vector_field},
                {"action_normalization", c.action},
                {"battery", c.battery_id},
                {"version", c.version}};
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct ConfigError : InvalidInput {
    ConfigError(const std::string& field_, const std::string& msg)
        : InvalidInput(field_ + ": " + msg), field(field_) {}
    std::string field;
};

struct RunConfig {
    std::string model_name = "pendulum";
    std::string model_file;  // tabulated models load their grid from here
    std::map<std::string, double> model_params;
    Vec lambda_grid;
    double lambda0 = 0.0;
    int k = 8;
    std::vector<int> k_schedule = {1, 2, 4, 8, 16};
    int N = 16;
    std::string backend = "auto";
    std::string theorem = "main_thm";
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    double window = 0.45;
    int grid_points = 19;
    std::vector<std::pair<std::string, std::map<std::string, double>>> directions;
    json raw;

    HamiltonianModel model() const {
        if (model_name == "tabulated") {
            std::ifstream in(model_file);
            if (!in) throw ConfigError("model.file", "cannot open '" + model_file + "'");
            json t;
            in >> t;
            std::vector<Vec> values;
            for (const auto& row : t.at("values")) values.push_back(row.get<Vec>());
            models::TabulatedModel tab(values, t.at("p_lo").get<double>(),
                                       t.at("p_hi").get<double>());
            auto m = tab.model();
            validate_model(m);
            return m;
        }
        return make_model(model_name, model_params);
    }

    Backend backend_enum() const {
        if (backend == "auto") return Backend::Auto;
        if (backend == "min") return Backend::Min;
        if (backend == "persistence") return Backend::MinimaxPersistence;
        if (backend == "continuation") return Backend::Continuation;
        throw ConfigError("backend", "unknown backend '" + backend + "'");
    }

    VerifyConfig verify_config() const {
        VerifyConfig v;
        v.k_schedule = k_schedule;
        v.N = N;
        v.seed = seed;
        v.window = window;
        v.grid_points = grid_points;
        return v;
    }
};

namespace detail {

inline void reject_unknown(const json& obj, const std::vector<std::string>& allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError(where + "." + it.key(), "unknown key");
    }
}

inline std::map<std::string, double> number_map(const json& obj, const std::string& where) {
    std::map<std::string, double> out;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (it.key() == "name") continue;
        if (!it.value().is_number()) throw ConfigError(where + "." + it.key(), "must be a number");
        out[it.key()] = it.value().get<double>();
    }
    return out;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
    RunConfig c;
    c.raw = j;
    detail::reject_unknown(j, {"model", "lambda", "lambda0", "k", "k_schedule", "N", "backend",
                               "theorem", "seed", "out", "window", "grid_points", "directions"},
                           "config");
    if (j.contains("model")) {
        const json& m = j.at("model");
        if (!m.is_object() || !m.contains("name"))
            throw ConfigError("model", "must be an object with a 'name'");
        c.model_name = m.at("name").get<std::string>();
        if (m.contains("file")) c.model_file = m.at("file").get<std::string>();
        std::map<std::string, double> params;
        for (auto it = m.begin(); it != m.end(); ++it) {
            if (it.key() == "name" || it.key() == "file") continue;
            if (!it.value().is_number()) throw ConfigError("model." + it.key(), "must be a number");
            params[it.key()] = it.value().get<double>();
        }
        c.model_params = params;
    }
    if (j.contains("lambda")) {
        const json& l = j.at("lambda");
        if (l.is_object()) {
            detail::reject_unknown(l, {"min", "max", "count"}, "lambda");
            double lo = l.at("min").get<double>(), hi = l.at("max").get<double>();
            long count = l.at("count").get<long>();
            if (count < 2) throw ConfigError("lambda.count", "must be at least 2");
            if (!(hi > lo)) throw ConfigError("lambda.max", "must exceed lambda.min");
            for (long i = 0; i < count; ++i)
                c.lambda_grid.push_back(lo + (hi - lo) * double(i) / double(count - 1));
        } else if (l.is_array()) {
            for (const auto& v : l) c.lambda_grid.push_back(v.get<double>());
            if (c.lambda_grid.size() < 2) throw ConfigError("lambda", "need at least 2 values");
        } else {
            throw ConfigError("lambda", "must be {min,max,count} or an array");
        }
    }
    if (j.contains("lambda0")) c.lambda0 = j.at("lambda0").get<double>();
    if (j.contains("k")) {
        c.k = j.at("k").get<int>();
        if (c.k < 1) throw ConfigError("k", "must be a positive integer");
    }
    if (j.contains("k_schedule")) {
        c.k_schedule.clear();
        for (const auto& v : j.at("k_schedule")) {
            int k = v.get<int>();
            if (k < 1) throw ConfigError("k_schedule", "entries must be positive");
            if (!c.k_schedule.empty() && k <= c.k_schedule.back())
                throw ConfigError("k_schedule", "must be strictly increasing");
            c.k_schedule.push_back(k);
        }
        if (c.k_schedule.empty()) throw ConfigError("k_schedule", "must not be empty");
    }
    if (j.contains("N")) {
        c.N = j.at("N").get<int>();
        if (c.N < 4) throw ConfigError("N", "must be at least 4");
    }
    if (j.contains("backend")) c.backend = j.at("backend").get<std::string>();
    if (j.contains("theorem")) c.theorem = j.at("theorem").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
    if (j.contains("window")) c.window = j.at("window").get<double>();
    if (j.contains("grid_points")) {
        c.grid_points = j.at("grid_points").get<int>();
        if (c.grid_points < 5 || c.grid_points % 2 == 0)
            throw ConfigError("grid_points", "must be an odd integer of at least 5");
    }
    if (j.contains("directions")) {
        for (const auto& d : j.at("directions")) {
            if (!d.is_object() || !d.contains("name"))
                throw ConfigError("directions", "each entry needs a model 'name'");
            c.directions.emplace_back(d.at("name").get<std::string>(),
                                      detail::number_map(d, "directions"));
        }
    }
    c.backend_enum();  // validates the name
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config", std::string("parse error: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline json to_json(const CriticalPoint& cp) {
    return json{{"vars", cp.vars},
                {"value", cp.value},
                {"grad_norm", cp.grad_norm},
                {"index", cp.morse_index},
                {"lambda_partial", cp.lambda_partial},
                {"q0", cp.q0},
                {"displacement", cp.displacement},
                {"flags", json{{"degenerate", cp.degenerate}}}};
}

inline json to_json(const SpectralValue& sv) {
    return json{{"value", sv.value},
                {"method", sv.method},
                {"error_bar", sv.error_bar},
                {"certificate", to_json(sv.certificate)}};
}

inline json curve_json(const AlphaCurve& c, const RunConfig& cfg) {
    json per_k = json::object();
    for (std::size_t j = 0; j < c.k_schedule.size(); ++j)
        per_k["k" + std::to_string(c.k_schedule[j])] = c.per_k[j];
    return json{{"conventions", conventions_json()},
                {"model", json{{"name", cfg.model_name}, {"params", cfg.model_params}}},
                {"backend", c.backend},
                {"seed", cfg.seed},
                {"N", cfg.N},
                {"lambdas", c.lambdas},
                {"per_k", per_k},
                {"alpha", c.alpha},
                {"err", c.err},
                {"lipschitz_constant", c.lipschitz_constant},
                {"warnings", c.warnings}};
}

inline std::string curve_csv(const AlphaCurve& c) {
    std::ostringstream os;
    os << "# convention=" << (calibrated_orientation().tag()) << " battery=" << kBatteryId << "\n";
    os << "lambda";
    for (int k : c.k_schedule) os << ",f_" << k;
    os << ",alpha,err\n";
    for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
        os << fmt(c.lambdas[i]);
        for (std::size_t j = 0; j < c.per_k.size(); ++j) os << "," << fmt(c.per_k[j][i]);
        os << "," << fmt(c.alpha[i]) << "," << fmt(c.err[i]) << "\n";
    }
    return os.str();
}

inline std::string measure_csv(const EmpiricalMeasure& m) {
    std::ostringstream os;
    bool with_time = m.has_time();
    os << "# convention=" << calibrated_orientation().tag() << "\n";
    os << "q,q_lift,p";
    if (with_time) os << ",s";
    os << ",weight\n";
    for (const auto& a : m.atoms) {
        for (std::size_t i = 0; i < a.z.q.size(); ++i)
            os << (i ? ";" : "") << fmt(a.z.q[i]);
        os << ",";
        for (std::size_t i = 0; i < a.z.q_lift.size(); ++i)
            os << (i ? ";" : "") << fmt(a.z.q_lift[i]);
        os << ",";
        for (std::size_t i = 0; i < a.z.p.size(); ++i)
            os << (i ? ";" : "") << fmt(a.z.p[i]);
        if (with_time) os << "," << fmt(a.s);
        os << "," << fmt(a.weight) << "\n";
    }
    return os.str();
}

inline json stats_json(const MeasureStats& st) {
    return json{{"rho", st.rho},
                {"action", st.action},
                {"invariance_residual", st.invariance_residual},
                {"closedness_residual", st.closedness_residual},
                {"battery", st.test_battery_id},
                {"conventions", conventions_json()}};
}

inline json subdiff_json(const SubdiffEstimate& sd) {
    json samples = json::array();
    for (const auto& s : sd.samples)
        samples.push_back(json{{"at", s.at}, {"gradient", s.gradient}, {"radius", s.radius}});
    json witnesses = json::array();
    for (const auto& w : sd.witnesses)
        witnesses.push_back(json{{"k", w.k}, {"lambda", w.lambda}, {"eta", w.eta}});
    return json{{"at", sd.at},
                {"polytope", sd.polytope},
                {"method", sd.method},
                {"radii", sd.radii},
                {"samples", samples},
                {"witnesses", witnesses},
                {"divergence_warning", sd.divergence_warning},
                {"conventions", conventions_json()}};
}

inline json report_json(const TheoremReport& r) {
    return json{{"theorem", r.theorem_id},
                {"inputs", r.inputs},
                {"predicted", r.predicted},
                {"measured", r.measured},
                {"tolerances", r.tolerances},
                {"pass", r.pass},
                {"skipped", r.skipped},
                {"skip_reason", r.skip_reason},
                {"notes", r.notes},
                {"residual_by_k", r.residual_by_k},
                {"stats", stats_json(r.stats)},
                {"conventions", conventions_json()}};
}

inline std::string report_summary(const TheoremReport& r) {
    std::ostringstream os;
    os << "theorem " << r.theorem_id << ": "
       << (r.skipped ? "SKIP (" + r.skip_reason + ")" : (r.pass ? "PASS" : "FAIL")) << "\n";
    for (const auto& [name, tol] : r.tolerances) {
        os << "  " << name << ": measured " << fmt(r.measured.at(name)) << " vs predicted "
           << fmt(r.predicted.at(name)) << " (tol " << fmt(tol) << ")\n";
    }
    for (const auto& n : r.notes) os << "  note: " << n << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Filesystem + stage cache
// ---------------------------------------------------------------------------

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot write '" + path.string() + "'");
    out << text;
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Content-hash keyed stage results under <out>/cache; a hit reproduces the
/// exact previous output without recomputation.
class StageCache {
public:
    explicit StageCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::optional<json> lookup(const std::string& stage, const json& key) const {
        auto p = path_for(stage, key);
        std::ifstream in(p);
        if (!in) return std::nullopt;
        json j;
        try {
            in >> j;
        } catch (...) {
            return std::nullopt;
        }
        return j;
    }

    void store(const std::string& stage, const json& key, const json& value) const {
        write_text(path_for(stage, key), value.dump(1));
    }

private:
    std::filesystem::path path_for(const std::string& stage, const json& key) const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a(stage + "|" + key.dump())));
        return dir_ / (stage + "-" + buf + ".json");
    }
    std::filesystem::path dir_;
};

}  // namespace symhom::io
