// Command-line front end: every computation is driven by a JSON config and
// writes deterministic CSV/JSON artifacts stamped with the conventions
// manifest. Exit codes: 0 success, 1 failed verification, 2 invalid input.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "symhom/io.hpp"
#include "symhom/oracle.hpp"

using namespace symhom;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_override;
    long seed_override = -1;
    std::string backend_override;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON run configuration")->required();
    cmd->add_option("--out", args.out_override, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed_override, "deterministic seed (overrides config)");
    cmd->add_option("--backend", args.backend_override,
                    "selector backend: min, persistence, continuation, auto");
}

io::RunConfig load(const CommonArgs& args) {
    io::RunConfig cfg = io::load_config(args.config_path);
    if (!args.out_override.empty()) cfg.out_dir = args.out_override;
    if (args.seed_override >= 0) cfg.seed = std::uint64_t(args.seed_override);
    if (!args.backend_override.empty()) cfg.backend = args.backend_override;
    cfg.backend_enum();
    return cfg;
}

json cache_key(const io::RunConfig& cfg, const std::string& extra = "") {
    json key = cfg.raw;
    key.erase("out");
    key["_seed"] = cfg.seed;
    key["_backend"] = cfg.backend;
    key["_extra"] = extra;
    key["_conventions"] = io::conventions_json();
    return key;
}

int cmd_alpha(const io::RunConfig& cfg) {
    fs::path out(cfg.out_dir);
    io::StageCache cache(out / "cache");
    json curve_j;
    if (auto hit = cache.lookup("alpha", cache_key(cfg))) {
        curve_j = *hit;
        std::fprintf(stderr, "alpha: reusing cached stage output\n");
    } else {
        if (cfg.lambda_grid.size() < 2)
            throw io::ConfigError("lambda", "alpha needs a lambda grid");
        HomogenizeOptions opts;
        opts.k_schedule = cfg.k_schedule;
        opts.fk.N = cfg.N;
        opts.fk.backend = cfg.backend_enum();
        opts.fk.multistart.seed = cfg.seed;
        auto curve = homogenize(cfg.model(), cfg.lambda_grid, opts);
        curve_j = io::curve_json(curve, cfg);
        // embed the flat CSV so a cache hit reproduces files bit for bit
        curve_j["_csv"] = io::curve_csv(curve);
        cache.store("alpha", cache_key(cfg), curve_j);
    }
    io::write_text(out / "alpha.json", curve_j.dump(1) + "\n");
    io::write_text(out / "alpha.csv", curve_j.at("_csv").get<std::string>());
    std::ostringstream plot;
    const auto& xs = curve_j.at("lambdas");
    const auto& al = curve_j.at("alpha");
    const auto& er = curve_j.at("err");
    plot << "# lambda alpha err\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
        plot << io::fmt(xs[i].get<double>()) << " " << io::fmt(al[i].get<double>()) << " "
             << io::fmt(er[i].get<double>()) << "\n";
    io::write_text(out / "alpha_plot.dat", plot.str());
    std::printf("alpha: wrote %s\n", (out / "alpha.csv").string().c_str());
    return 0;
}

int cmd_oracle(const io::RunConfig& cfg) {
    fs::path out(cfg.out_dir);
    io::StageCache cache(out / "cache");
    json data;
    if (auto hit = cache.lookup("oracle", cache_key(cfg))) {
        data = *hit;
        std::fprintf(stderr, "oracle: reusing cached stage output\n");
    } else {
        if (cfg.lambda_grid.size() < 2)
            throw io::ConfigError("lambda", "oracle needs a lambda grid");
        TwistOracleSettings set;
        set.rho_max = 1.0 + norm_inf(cfg.lambda_grid) + 1.0;
        TwistOracle oracle(cfg.model(), set);
        Vec alphas;
        for (double lam : cfg.lambda_grid) alphas.push_back(oracle.alpha(lam));
        data = json{{"lambdas", cfg.lambda_grid},
                    {"alpha", alphas},
                    {"model", cfg.model_name},
                    {"conventions", io::conventions_json()}};
        cache.store("oracle", cache_key(cfg), data);
    }
    std::ostringstream csv;
    csv << "lambda,alpha_oracle\n";
    const auto& xs = data.at("lambdas");
    const auto& al = data.at("alpha");
    for (std::size_t i = 0; i < xs.size(); ++i)
        csv << io::fmt(xs[i].get<double>()) << "," << io::fmt(al[i].get<double>()) << "\n";
    io::write_text(out / "oracle.csv", csv.str());
    io::write_text(out / "oracle.json", data.dump(1) + "\n");
    std::printf("oracle: wrote %s\n", (out / "oracle.csv").string().c_str());
    return 0;
}

int cmd_subdiff(const io::RunConfig& cfg) {
    fs::path out(cfg.out_dir);
    auto model = cfg.model();
    VerifyConfig v = cfg.verify_config();
    auto cd = verify_detail::window_curve(model, cfg.lambda0, v);
    std::vector<SampledGrid> fks;
    for (std::size_t j = 0; j < v.k_schedule.size(); ++j)
        fks.push_back(verify_detail::fk_grid(cd.curve, j));
    auto limsup = limsup_subdiff(v.k_schedule, fks, {cfg.lambda0});
    auto clarke = clarke_subdiff(SampledGrid::line(cd.curve.lambdas, cd.curve.alpha),
                                 {cfg.lambda0},
                                 {3.9 * cfg.window / (cfg.grid_points / 2),
                                  1.9 * cfg.window / (cfg.grid_points / 2)});
    json outj{{"clarke", io::subdiff_json(clarke)},
              {"limsup", io::subdiff_json(limsup)},
              {"lambda0", cfg.lambda0}};
    io::write_text(out / "subdiff.json", outj.dump(1) + "\n");
    std::printf("subdiff: clarke [%s, %s], limsup [%s, %s]\n", io::fmt(clarke.lo()).c_str(),
                io::fmt(clarke.hi()).c_str(), io::fmt(limsup.lo()).c_str(),
                io::fmt(limsup.hi()).c_str());
    return 0;
}

int cmd_chords(const io::RunConfig& cfg, bool with_measures) {
    fs::path out(cfg.out_dir);
    auto model = cfg.model();
    FkOptions fko;
    fko.N = cfg.N;
    fko.backend = cfg.backend_enum();
    fko.multistart.seed = cfg.seed;
    double fk = compute_fk(model, {cfg.lambda0}, cfg.k, fko);
    ExtractOptions eo;
    eo.N = cfg.N;
    eo.multistart.seed = cfg.seed;
    auto chords = extract_chords(model, {cfg.lambda0}, cfg.k, fk,
                                 std::max(1e-6, 2e-4 * cfg.k), eo);
    std::ostringstream csv;
    csv << "# convention=" << calibrated_orientation().tag() << "\n";
    csv << "index,q0,action,displacement,w_value\n";
    for (std::size_t i = 0; i < chords.size(); ++i) {
        const auto& c = chords[i];
        csv << i << "," << io::fmt(c.samples.front().q[0]) << "," << io::fmt(c.action) << ","
            << io::fmt(c.displacement[0]) << "," << io::fmt(c.w_value) << "\n";
    }
    io::write_text(out / "chords.csv", csv.str());
    if (with_measures) {
        auto battery = battery_v1(model.dim);
        for (std::size_t i = 0; i < chords.size(); ++i) {
            auto m = chord_measure(chords[i], model.time_dependent);
            io::write_text(out / ("measure_" + std::to_string(i) + ".csv"), io::measure_csv(m));
            io::write_text(out / ("measure_" + std::to_string(i) + ".json"),
                           io::stats_json(measure_stats(m, model, battery)).dump(1) + "\n");
        }
    }
    std::printf("chords: %zu chord(s) at f_k = %s\n", chords.size(), io::fmt(fk).c_str());
    return 0;
}

int cmd_verify(const io::RunConfig& cfg) {
    fs::path out(cfg.out_dir);
    auto model = cfg.model();
    VerifyConfig v = cfg.verify_config();
    TheoremReport rep;
    if (cfg.theorem == "main_thm") {
        rep = verify_main_theorem(model, cfg.lambda0, v);
    } else if (cfg.theorem == "maincor") {
        rep = verify_clarke_corollary(model, cfg.lambda0, v);
    } else if (cfg.theorem == "rotation_gap") {
        if (cfg.lambda_grid.size() < 2)
            throw io::ConfigError("lambda", "rotation_gap uses lambda {min,max}");
        rep = rotation_gap_certificate(model, cfg.lambda_grid.front(), cfg.lambda_grid.back(),
                                       cfg.lambda0, v);  // lambda0 doubles as the gap
    } else if (cfg.theorem == "nonautonomous") {
        rep = verify_nonautonomous(model, cfg.lambda0, v);
    } else if (cfg.theorem == "local") {
        std::vector<HamiltonianModel> dirs;
        for (const auto& [name, params] : cfg.directions) dirs.push_back(make_model(name, params));
        if (dirs.empty()) throw io::ConfigError("directions", "local needs perturbation directions");
        rep = localize(model, dirs, v);
    } else {
        throw io::ConfigError("theorem", "unknown theorem '" + cfg.theorem + "'");
    }
    io::write_text(out / ("report_" + rep.theorem_id + ".json"),
                   io::report_json(rep).dump(1) + "\n");
    io::write_text(out / ("report_" + rep.theorem_id + ".txt"), io::report_summary(rep));
    io::write_text(out / ("measure_" + rep.theorem_id + ".csv"), io::measure_csv(rep.measure));
    std::fputs(io::report_summary(rep).c_str(), stdout);
    return (rep.pass || rep.skipped) ? 0 : 1;
}

int cmd_localize(const io::RunConfig& cfg) {
    io::RunConfig c = cfg;
    c.theorem = "local";
    return cmd_verify(c);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for homogenized Hamiltonian selectors and the invariant "
                 "measures they prescribe"};
    app.require_subcommand(1);

    CommonArgs args;
    auto* alpha = app.add_subcommand("alpha", "homogenized curve over a class grid");
    auto* subdiff = app.add_subcommand("subdiff", "Clarke/limsup subdifferential report");
    auto* chords = app.add_subcommand("chords", "selected chords at a class");
    auto* measure = app.add_subcommand("measure", "chords plus serialized measures and stats");
    auto* verify = app.add_subcommand("verify", "run a theorem pipeline; exit 1 on failure");
    auto* oracle = app.add_subcommand("oracle", "convex-side cross-check curve");
    auto* localize = app.add_subcommand("localize", "perturbation-direction experiment");
    for (auto* cmd : {alpha, subdiff, chords, measure, verify, oracle, localize})
        add_common(cmd, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        io::RunConfig cfg = load(args);
        if (alpha->parsed()) return cmd_alpha(cfg);
        if (subdiff->parsed()) return cmd_subdiff(cfg);
        if (chords->parsed()) return cmd_chords(cfg, false);
        if (measure->parsed()) return cmd_chords(cfg, true);
        if (verify->parsed()) return cmd_verify(cfg);
        if (oracle->parsed()) return cmd_oracle(cfg);
        if (localize->parsed()) return cmd_localize(cfg);
    } catch (const io::ConfigError& e) {
        nlohmann::json diag{{"error", "invalid-config"}, {"field", e.field}, {"message", e.what()}};
        std::fprintf(stderr, "%s\n", diag.dump().c_str());
        return 2;
    } catch (const InvalidInput& e) {
        nlohmann::json diag{{"error", "invalid-input"}, {"message", e.what()}};
        std::fprintf(stderr, "%s\n", diag.dump().c_str());
        return 2;
    } catch (const Error& e) {
        nlohmann::json diag{{"error", e.kind()}, {"message", e.what()}};
        std::fprintf(stderr, "%s\n", diag.dump().c_str());
        return 1;
    }
    return 2;
}
