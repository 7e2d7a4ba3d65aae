// kerrcav_cli.cpp — command line front end: run, sweep, check, presets.
//
// Exit codes: 0 success, 2 usage error, 3 config or validation error,
// 4 run failure (integrator or truncation guard), 5 filesystem error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <kerrcav/scenarios.hpp>

namespace fs = std::filesystem;
using namespace kerrcav;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitRun = 4;
constexpr int kExitIo = 5;

ScenarioSpec spec_from_flags(const std::string& config_path, const std::string& preset_id) {
    ScenarioSpec base;
    if (!preset_id.empty()) {
        auto id = preset_from_string(preset_id);
        if (!id)
            throw detail::ConfigError("unknown preset '" + preset_id + "'");
        base = preset(*id);
    }
    return load_config(config_path, base);
}

int cmd_run(const std::string& config_path, const std::string& preset_id,
            std::string out_dir, std::optional<std::uint64_t> seed) {
    ScenarioSpec spec = spec_from_flags(config_path, preset_id);
    if (seed) spec.trajectories.master_seed = *seed;
    if (out_dir.empty()) out_dir = "out-" + spec.name;

    RunManifest man = run_scenario(spec, out_dir);
    std::cout << "run: " << spec.name << " -> " << out_dir << "\n";
    std::cout << "  cutoffs " << spec.cutoff_a << "x" << spec.cutoff_b << ", t_end "
              << spec.evolution.t_end << ", dt " << spec.evolution.dt << "\n";
    std::cout << "  top populations " << man.top_a << " (photon) " << man.top_b
              << " (exciton)\n";
    if (spec.trajectories_enabled)
        std::cout << "  trajectories: " << spec.trajectories.n_traj << " ("
                  << (spec.trajectories.unraveling == Unraveling::jump ? "jump"
                                                                       : "diffusion")
                  << "), master_seed " << spec.trajectories.master_seed << "\n";
    std::cout << "  wall clock " << man.duration_seconds << " s\n";
    return 0;
}

int cmd_sweep(const std::string& preset_id, std::optional<double> chi,
              std::optional<double> g_min, std::optional<double> g_max,
              std::optional<double> g_step, const std::string& out_dir) {
    auto id = preset_from_string(preset_id);
    if (!id) throw detail::ConfigError("unknown preset '" + preset_id + "'");
    ScenarioSpec spec = preset(*id);
    if (!spec.sweep)
        throw detail::ConfigError("preset '" + preset_id + "' has no sweep descriptor");
    if (chi) spec.model.chi = *chi;
    const int given = int(bool(g_min)) + int(bool(g_max)) + int(bool(g_step));
    if (given != 0 && given != 3)
        throw detail::ConfigError("--g-min, --g-max and --g-step must be given together");
    if (given == 3) {
        if (!(*g_step > 0.0) || *g_max < *g_min)
            throw detail::ConfigError("need g-step > 0 and g-max >= g-min");
        spec.sweep->values.clear();
        for (double v = *g_min; v <= *g_max + 1e-12; v += *g_step)
            spec.sweep->values.push_back(v);
    }

    std::cout << "sweep: " << spec.name << ", " << spec.sweep->parameter << " over "
              << spec.sweep->values.size() << " values, chi " << spec.model.chi << "\n";
    RunManifest man = sweep(spec, out_dir, [](const SweepPoint& p) {
        std::cerr << "  " << p.value << ": min_q_a " << p.min_q_a << " (cutoffs "
                  << p.cutoff_a << "x" << p.cutoff_b << ")\n";
    });
    std::cout << "  summary -> " << (fs::path(out_dir) / "sweep.csv").string() << "\n";
    std::cout << "  wall clock " << man.duration_seconds << " s\n";
    return 0;
}

int cmd_check(const std::string& config_path, const std::string& preset_id) {
    ScenarioSpec spec = spec_from_flags(config_path, preset_id);
    ConvergenceReport rep = convergence_check(spec);
    std::cout << "convergence_check: " << spec.name << "\n";
    std::cout << "  base:    cutoffs " << rep.base_cutoff_a << "x" << rep.base_cutoff_b
              << ", dt " << rep.base_dt << "\n";
    std::cout << "  refined: cutoffs " << rep.ref_cutoff_a << "x" << rep.ref_cutoff_b
              << ", dt " << rep.ref_dt << "\n";
    std::cout << "  horizon: " << rep.horizon << "\n";
    std::cout << "  max rel change <n_a>: " << rep.max_rel_n_a << "\n";
    std::cout << "  max rel change Q_a:   " << rep.max_rel_q_a << "\n";
    std::cout << "  result: " << (rep.pass ? "PASS" : "FAIL") << " (threshold 1e-3)\n";
    return 0;
}

int cmd_presets() {
    const char* blurb[] = {
        "closed collapse and revival from four injected photons",
        "cw drive, sub-Poissonian steady state",
        "modulated drive, periodic Q and Wigner snapshots at the extrema",
        "stronger Kerr and coupling, deepest Q window",
        "same run as fig4 plus number distributions at the extrema",
        "sweep of min Q_a over the coupling for several Kerr constants",
        "modulated drive at thermal occupations 0.01, 0.05 and 1",
    };
    int k = 0;
    for (PresetId id : {PresetId::fig1, PresetId::fig2, PresetId::fig3, PresetId::fig4,
                        PresetId::fig5, PresetId::fig6, PresetId::fig7})
        std::cout << to_string(id) << "  " << blurb[k++] << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kerrcav: driven Kerr cavity-exciton simulator"};
    app.require_subcommand(1);

    std::string config_path, preset_id, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> chi, g_min, g_max, g_step;

    auto* run = app.add_subcommand("run", "integrate one scenario and write its outputs");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--preset", preset_id, "preset the config overrides");
    run->add_option("--out", out_dir, "output directory (default out-<name>)");
    run->add_option("--seed", seed, "override the trajectory master seed");

    auto* sw = app.add_subcommand("sweep", "run a parameter sweep and summarize min Q_a");
    sw->add_option("--preset", preset_id, "preset holding the sweep descriptor")->required();
    sw->add_option("--chi", chi, "override the Kerr constant");
    sw->add_option("--g-min", g_min, "sweep range start");
    sw->add_option("--g-max", g_max, "sweep range end");
    sw->add_option("--g-step", g_step, "sweep range step");
    sw->add_option("--out", out_dir, "output directory")->required();

    auto* check = app.add_subcommand("check", "convergence check (doubled cutoffs, halved dt)");
    check->add_option("--config", config_path, "config file")->required();
    check->add_option("--preset", preset_id, "preset the config overrides");

    auto* presets = app.add_subcommand("presets", "list the built-in presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, preset_id, out_dir, seed);
        if (sw->parsed()) return cmd_sweep(preset_id, chi, g_min, g_max, g_step, out_dir);
        if (check->parsed()) return cmd_check(config_path, preset_id);
        if (presets->parsed()) return cmd_presets();
    } catch (const detail::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TruncationError& e) {
        std::cerr << "run error: " << e.what() << "\n";
        return kExitRun;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "run error: " << e.what() << "\n";
        return kExitRun;
    }
    return 0;
}
