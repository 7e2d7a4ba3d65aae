// scenarios.hpp — presets, config files, scenario orchestration and export.
// This is the library's external surface: everything the CLI does lives here
// so tests can drive the exact same paths in-process.

#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "observables.hpp"
#include "phasespace.hpp"

namespace kerrcav {

inline constexpr const char* kVersion = "1.0.0";

// ---- scenario spec ----

enum class PresetId { fig1, fig2, fig3, fig4, fig5, fig6, fig7 };

inline std::string to_string(PresetId id) {
    switch (id) {
        case PresetId::fig1: return "fig1";
        case PresetId::fig2: return "fig2";
        case PresetId::fig3: return "fig3";
        case PresetId::fig4: return "fig4";
        case PresetId::fig5: return "fig5";
        case PresetId::fig6: return "fig6";
        case PresetId::fig7: return "fig7";
    }
    return "?";
}

inline std::optional<PresetId> preset_from_string(std::string_view s) {
    for (PresetId id : {PresetId::fig1, PresetId::fig2, PresetId::fig3, PresetId::fig4,
                        PresetId::fig5, PresetId::fig6, PresetId::fig7})
        if (s == to_string(id)) return id;
    return std::nullopt;
}

struct InitialState {
    bool is_vacuum = true;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
};

enum class SnapshotPolicy { none, final_time, extrema };

struct OutputSpec {
    std::size_t wigner_grid_n = 101;
    double wigner_grid_radius = 4.0;
    SnapshotPolicy snapshots = SnapshotPolicy::none;
};

struct SweepSpec {
    std::string parameter;       // model field name, e.g. "g"
    std::vector<double> values;  // nonempty, finite
};

struct ScenarioSpec {
    std::string name = "custom";
    ModelParams model;
    InitialState init;
    EvolutionConfig evolution;
    bool trajectories_enabled = false;
    TrajectoryConfig trajectories;
    std::size_t cutoff_a = 16;
    std::size_t cutoff_b = 10;
    OutputSpec output;
    std::optional<SweepSpec> sweep;
    std::vector<double> chi_variants;   // companion curves of the coupling sweep
    std::vector<double> n_th_variants;  // thermal study values
    double transient_cut = 10.0;

    CompositeSpace space() const {
        return CompositeSpace{ModeSpace(cutoff_a), ModeSpace(cutoff_b)};
    }
    Vector initial_vector() const {
        const auto sp = space();
        return init.is_vacuum ? vacuum(sp) : fock(sp, init.n_a, init.n_b);
    }
    Matrix initial_density() const { return density_from(initial_vector()); }

    void validate() const {
        model.validate();
        evolution.validate();
        if (trajectories_enabled) trajectories.validate();
        if (cutoff_a < 2 || cutoff_b < 2)
            throw std::invalid_argument("ScenarioSpec: cutoffs must be >= 2");
        if (!init.is_vacuum && (init.n_a >= cutoff_a || init.n_b >= cutoff_b))
            throw std::invalid_argument("ScenarioSpec: initial Fock indices must be below the cutoffs");
        if (output.wigner_grid_n < 2)
            throw std::invalid_argument("ScenarioSpec: wigner_grid_n must be >= 2");
        if (!(output.wigner_grid_radius > 0.0))
            throw std::invalid_argument("ScenarioSpec: wigner_grid_radius must be > 0");
        if (output.snapshots == SnapshotPolicy::extrema && model.delta_mod == 0.0)
            throw std::invalid_argument("ScenarioSpec: extrema snapshots require delta_mod != 0");
        if (sweep) {
            if (sweep->values.empty())
                throw std::invalid_argument("ScenarioSpec: sweep values must be nonempty");
            for (double v : sweep->values)
                if (!std::isfinite(v))
                    throw std::invalid_argument("ScenarioSpec: sweep values must be finite");
        }
    }
};

// ---- presets ----

inline ScenarioSpec preset(PresetId id) {
    ScenarioSpec s;
    s.name = to_string(id);
    s.model.delta_ph = s.model.delta_ex = 7.12;
    s.trajectories.n_traj = 2000;
    s.trajectories.master_seed = 12345;
    switch (id) {
        case PresetId::fig1:
            // closed collapse-revival: four photons injected, no drive, no loss
            s.model.chi = 4.0;
            s.model.g = 5.0;
            s.model.gamma_a = s.model.gamma_b = 0.0;
            s.init = {false, 4, 0};
            s.cutoff_a = s.cutoff_b = 8;
            s.evolution.t_end = 10.0;
            s.evolution.dt = 2e-4;
            s.evolution.sample_every = 50;
            break;
        case PresetId::fig2:
            // cw drive baseline
            s.model.chi = 1.0;
            s.model.g = 5.0;
            s.model.omega1 = 5.0;
            s.cutoff_a = 16;
            s.cutoff_b = 10;
            s.evolution.t_end = 50.0;
            s.output.snapshots = SnapshotPolicy::final_time;
            break;
        case PresetId::fig3:
            // modulated drive
            s.model.chi = 1.0;
            s.model.g = 5.0;
            s.model.omega1 = s.model.omega2 = 5.0;
            s.model.delta_mod = 2.0;
            s.cutoff_a = 22;
            s.cutoff_b = 10;
            s.evolution.t_end = 50.0;
            s.output.snapshots = SnapshotPolicy::extrema;
            break;
        case PresetId::fig4:
        case PresetId::fig5:
            // deep sub-Poissonian working point; fig5 reads the same run's
            // number distributions at the extrema
            s.model.chi = 3.0;
            s.model.g = 7.0;
            s.model.omega1 = s.model.omega2 = 5.0;
            s.model.delta_mod = 2.0;
            s.cutoff_a = 24;
            s.cutoff_b = 12;
            s.evolution.t_end = 30.0;
            s.output.snapshots = SnapshotPolicy::extrema;
            break;
        case PresetId::fig6: {
            // coupling sweep at fixed Kerr constants
            s.model.chi = 3.0;
            s.model.g = 5.0;
            s.model.omega1 = s.model.omega2 = 5.0;
            s.model.delta_mod = 2.0;
            s.cutoff_a = 16;
            s.cutoff_b = 10;
            s.evolution.t_end = 15.0;
            SweepSpec sw;
            sw.parameter = "g";
            for (int k = 0; k <= 22; ++k) sw.values.push_back(1.0 + 0.5 * k);
            s.sweep = std::move(sw);
            s.chi_variants = {1.0, 3.0, 5.0};
            break;
        }
        case PresetId::fig7:
            // thermal degradation of the modulated scenario
            s.model.chi = 1.0;
            s.model.g = 5.0;
            s.model.omega1 = s.model.omega2 = 5.0;
            s.model.delta_mod = 2.0;
            s.model.n_th = 0.05;
            s.n_th_variants = {0.01, 0.05, 1.0};
            s.cutoff_a = 22;
            s.cutoff_b = 14;
            s.evolution.t_end = 30.0;
            break;
    }
    return s;
}

// ---- config files ----

namespace detail {

inline std::string trim(std::string_view v) {
    const char* ws = " \t\r";
    auto b = v.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = v.find_last_not_of(ws);
    return std::string(v.substr(b, e - b + 1));
}

inline std::string unquote(const std::string& v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                          (v.front() == '\'' && v.back() == '\'')))
        return v.substr(1, v.size() - 2);
    return v;
}

inline std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"') quoted = !quoted;
        if (!quoted && (c == '#' || c == ';')) return line.substr(0, i);
    }
    return line;
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double parse_double(const std::string& v, const std::string& where) {
    double out = 0.0;
    const auto* b = v.data();
    const auto* e = v.data() + v.size();
    auto res = std::from_chars(b, e, out);
    if (res.ec != std::errc{} || res.ptr != e)
        throw ConfigError(where + ": expected a number, got '" + v + "'");
    return out;
}

inline std::uint64_t parse_uint(const std::string& v, const std::string& where) {
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError(where + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& v, const std::string& where) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(where + ": expected true or false, got '" + v + "'");
}

}  // namespace detail

// Parses the four-section key = value schema.  Unknown sections or keys are
// hard errors; a `preset` key above the first section seeds the defaults.
// An explicit base spec (e.g. from a --preset flag) seeds them otherwise.
inline ScenarioSpec parse_config(std::istream& in, const std::string& origin = "config",
                                 const ScenarioSpec& base = ScenarioSpec{}) {
    using detail::ConfigError;
    ScenarioSpec spec = base;
    bool have_preset = false;
    std::string section;  // empty = top level
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        std::string body = detail::trim(detail::strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']')
                throw ConfigError(where + ": malformed section header '" + body + "'");
            section = detail::trim(body.substr(1, body.size() - 2));
            if (section != "model" && section != "evolution" && section != "trajectories" &&
                section != "output")
                throw ConfigError(where + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected key = value, got '" + body + "'");
        const std::string key = detail::trim(body.substr(0, eq));
        const std::string val = detail::unquote(detail::trim(body.substr(eq + 1)));
        if (key.empty()) throw ConfigError(where + ": empty key");

        if (section.empty()) {
            if (key == "preset") {
                if (have_preset)
                    throw ConfigError(where + ": duplicate preset key");
                auto id = preset_from_string(val);
                if (!id)
                    throw ConfigError(where + ": unknown preset '" + val + "'");
                spec = preset(*id);
                have_preset = true;
                continue;
            }
            throw ConfigError(where + ": unknown key '" + key + "' outside any section");
        }
        if (section == "model") {
            double* field = nullptr;
            if (key == "delta_ph") field = &spec.model.delta_ph;
            else if (key == "delta_ex") field = &spec.model.delta_ex;
            else if (key == "chi") field = &spec.model.chi;
            else if (key == "g") field = &spec.model.g;
            else if (key == "omega1") field = &spec.model.omega1;
            else if (key == "omega2") field = &spec.model.omega2;
            else if (key == "delta_mod") field = &spec.model.delta_mod;
            else if (key == "gamma_a") field = &spec.model.gamma_a;
            else if (key == "gamma_b") field = &spec.model.gamma_b;
            else if (key == "n_th") field = &spec.model.n_th;
            else throw ConfigError(where + ": unknown key '" + key + "' in [model]");
            *field = detail::parse_double(val, where);
        } else if (section == "evolution") {
            if (key == "t_end") spec.evolution.t_end = detail::parse_double(val, where);
            else if (key == "dt") spec.evolution.dt = detail::parse_double(val, where);
            else if (key == "sample_every")
                spec.evolution.sample_every =
                    static_cast<std::size_t>(detail::parse_uint(val, where));
            else throw ConfigError(where + ": unknown key '" + key + "' in [evolution]");
        } else if (section == "trajectories") {
            if (key == "enabled") spec.trajectories_enabled = detail::parse_bool(val, where);
            else if (key == "n_traj")
                spec.trajectories.n_traj =
                    static_cast<std::size_t>(detail::parse_uint(val, where));
            else if (key == "master_seed")
                spec.trajectories.master_seed = detail::parse_uint(val, where);
            else if (key == "unraveling") {
                if (val == "jump") spec.trajectories.unraveling = Unraveling::jump;
                else if (val == "diffusion")
                    spec.trajectories.unraveling = Unraveling::diffusion;
                else throw ConfigError(where + ": unraveling must be jump or diffusion");
            } else
                throw ConfigError(where + ": unknown key '" + key + "' in [trajectories]");
        } else if (section == "output") {
            if (key == "wigner_grid_n")
                spec.output.wigner_grid_n =
                    static_cast<std::size_t>(detail::parse_uint(val, where));
            else if (key == "wigner_grid_radius")
                spec.output.wigner_grid_radius = detail::parse_double(val, where);
            else if (key == "snapshots") {
                if (val == "none") spec.output.snapshots = SnapshotPolicy::none;
                else if (val == "final") spec.output.snapshots = SnapshotPolicy::final_time;
                else if (val == "extrema") spec.output.snapshots = SnapshotPolicy::extrema;
                else
                    throw ConfigError(where + ": snapshots must be none, final or extrema");
            } else
                throw ConfigError(where + ": unknown key '" + key + "' in [output]");
        }
    }
    spec.validate();
    return spec;
}

inline ScenarioSpec load_config(const std::filesystem::path& path,
                                const ScenarioSpec& base = ScenarioSpec{}) {
    std::ifstream in(path);
    if (!in)
        throw detail::ConfigError("load_config: cannot open '" + path.string() + "'");
    return parse_config(in, path.filename().string(), base);
}

// ---- scenario computation ----

// raised when an output file cannot be created or written
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// raised when a cutoff proves too small for the requested run
struct TruncationError : std::runtime_error {
    double top_a = 0.0, top_b = 0.0;
    double max_n_a = 0.0, max_n_b = 0.0;
    TruncationError(const std::string& msg, double ta, double tb, double na, double nb)
        : std::runtime_error(msg), top_a(ta), top_b(tb), max_n_a(na), max_n_b(nb) {}
};

struct Snapshot {
    std::string tag;  // "tmax", "tmin" or "final"
    double time = 0.0;
    std::size_t sample = 0;
    WignerGrid wigner_a;
    WignerGrid wigner_b;
    NumberDistribution dist_a;
    NumberDistribution dist_b;
};

struct ScenarioResult {
    EvolutionRecord record;
    ObservableSeries series;
    std::optional<EvolutionRecord> traj_record;
    std::optional<ObservableSeries> traj_series;
    std::optional<PeriodicWindow> window;
    std::vector<Snapshot> snapshots;
    double top_a = 0.0, top_b = 0.0;    // max top-level populations over samples
    double max_n_a = 0.0, max_n_b = 0.0;
};

namespace detail {

inline Snapshot make_snapshot(const ScenarioSpec& spec, const EvolutionRecord& rec,
                              std::size_t sample, const std::string& tag) {
    Snapshot snap;
    snap.tag = tag;
    snap.sample = sample;
    snap.time = rec.times[sample];
    WignerSpec ws;
    ws.n_x = ws.n_p = spec.output.wigner_grid_n;
    ws.radius = spec.output.wigner_grid_radius;
    snap.wigner_a = wigner(rec.rho_a[sample], ws);
    snap.wigner_b = wigner(rec.rho_b[sample], ws);
    snap.dist_a = number_distribution(rec.rho_a[sample], Mode::photon,
                                      spec.cutoff_a - 1, snap.time);
    snap.dist_b = number_distribution(rec.rho_b[sample], Mode::exciton,
                                      spec.cutoff_b - 1, snap.time);
    return snap;
}

}  // namespace detail

inline ScenarioResult compute_scenario(const ScenarioSpec& spec) {
    spec.validate();
    const auto sp = spec.space();

    ScenarioResult res;
    // closed scenarios propagate the pure state; dissipative ones the density
    const bool closed = spec.model.gamma_a == 0.0 && spec.model.gamma_b == 0.0;
    if (closed)
        res.record = evolve_schrodinger(spec.initial_vector(), spec.model, sp,
                                        spec.evolution);
    else
        res.record = evolve_master(spec.initial_density(), spec.model, sp, spec.evolution);
    res.series = series_from_record(res.record);

    const Eigen::Index ta = static_cast<Eigen::Index>(spec.cutoff_a) - 1;
    const Eigen::Index tb = static_cast<Eigen::Index>(spec.cutoff_b) - 1;
    for (std::size_t s = 0; s < res.record.size(); ++s) {
        res.top_a = std::max(res.top_a, res.record.rho_a[s](ta, ta).real());
        res.top_b = std::max(res.top_b, res.record.rho_b[s](tb, tb).real());
        res.max_n_a = std::max(res.max_n_a, res.series.n_a[s]);
        res.max_n_b = std::max(res.max_n_b, res.series.n_b[s]);
    }
    if (res.top_a > 1e-3 || res.top_b > 1e-3)
        throw TruncationError("compute_scenario: top-level population exceeds 1e-3; raise the cutoffs",
                              res.top_a, res.top_b, res.max_n_a, res.max_n_b);

    if (spec.model.delta_mod != 0.0) {
        const double period = 2.0 * pi / std::abs(spec.model.delta_mod);
        if (spec.evolution.t_end >= spec.transient_cut + period)
            res.window = find_periodic_window(res.record, spec.model, spec.transient_cut);
    }

    if (spec.output.snapshots == SnapshotPolicy::extrema) {
        if (!res.window || res.window->degenerate)
            throw std::runtime_error(
                "compute_scenario: extrema snapshots need a non-degenerate modulation window");
        res.snapshots.push_back(
            detail::make_snapshot(spec, res.record, res.window->idx_max, "tmax"));
        res.snapshots.push_back(
            detail::make_snapshot(spec, res.record, res.window->idx_min, "tmin"));
    } else if (spec.output.snapshots == SnapshotPolicy::final_time) {
        res.snapshots.push_back(
            detail::make_snapshot(spec, res.record, res.record.size() - 1, "final"));
    }

    if (spec.trajectories_enabled) {
        res.traj_record = run_trajectories(spec.initial_vector(), spec.model, sp,
                                           spec.evolution, spec.trajectories);
        res.traj_series = series_from_record(*res.traj_record);
    }
    return res;
}

// ---- series statistics ----

// min over valid samples with t >= cut; NaN when no valid sample exists
inline double min_after_cut(const std::vector<double>& times,
                            const std::vector<double>& values,
                            const std::vector<bool>& valid, double cut) {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t s = 0; s < times.size(); ++s) {
        if (times[s] < cut || !valid[s]) continue;
        if (std::isnan(best) || values[s] < best) best = values[s];
    }
    return best;
}

inline double max_after_cut(const std::vector<double>& times,
                            const std::vector<double>& values,
                            const std::vector<bool>& valid, double cut) {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t s = 0; s < times.size(); ++s) {
        if (times[s] < cut || !valid[s]) continue;
        if (std::isnan(best) || values[s] > best) best = values[s];
    }
    return best;
}

inline double time_average(const std::vector<double>& times,
                           const std::vector<double>& values, double t_lo, double t_hi) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < times.size(); ++s) {
        if (times[s] < t_lo || times[s] > t_hi || std::isnan(values[s])) continue;
        sum += values[s];
        ++count;
    }
    if (count == 0) return std::numeric_limits<double>::quiet_NaN();
    return sum / static_cast<double>(count);
}

// ---- file export ----

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void write_series_file(const std::filesystem::path& path,
                              const ObservableSeries& s) {
    std::ofstream out(path);
    if (!out) throw IoError("write_series_file: cannot open " + path.string());
    out << "t,n_a,n_b,Q_a,Q_b,g2_a,g2_b\n";
    for (std::size_t k = 0; k < s.size(); ++k)
        out << fmt(s.times[k]) << ',' << fmt(s.n_a[k]) << ',' << fmt(s.n_b[k]) << ','
            << fmt(s.q_a[k]) << ',' << fmt(s.q_b[k]) << ',' << fmt(s.g2_a[k]) << ','
            << fmt(s.g2_b[k]) << '\n';
    if (!out) throw IoError("write_series_file: write failed " + path.string());
}

inline void write_wigner_file(const std::filesystem::path& path, const WignerGrid& g) {
    std::ofstream out(path);
    if (!out) throw IoError("write_wigner_file: cannot open " + path.string());
    out << "# convention=" << g.convention << "\n";
    out << "# grid=" << g.re_alpha.size() << 'x' << g.im_alpha.size()
        << " radius=" << fmt(g.re_alpha.back()) << "\n";
    out << "re_alpha,im_alpha,w\n";
    for (std::size_t i = 0; i < g.re_alpha.size(); ++i)
        for (std::size_t j = 0; j < g.im_alpha.size(); ++j)
            out << fmt(g.re_alpha[i]) << ',' << fmt(g.im_alpha[j]) << ','
                << fmt(g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
                << '\n';
    if (!out) throw IoError("write_wigner_file: write failed " + path.string());
}

inline void write_distribution_file(const std::filesystem::path& path,
                                    const NumberDistribution& d) {
    std::ofstream out(path);
    if (!out)
        throw IoError("write_distribution_file: cannot open " + path.string());
    out << "n,probability\n";
    for (std::size_t n = 0; n < d.probabilities.size(); ++n)
        out << n << ',' << fmt(d.probabilities[n]) << '\n';
    if (!out)
        throw IoError("write_distribution_file: write failed " + path.string());
}

}  // namespace detail

// ---- run manifest ----

struct SweepPoint {
    double value = 0.0;
    double min_q_a = 0.0;
    std::size_t cutoff_a = 0, cutoff_b = 0;
    double top_a = 0.0, top_b = 0.0;
};

struct RunManifest {
    ScenarioSpec spec;
    double top_a = 0.0, top_b = 0.0;
    double duration_seconds = 0.0;
    std::string version = kVersion;
    std::vector<SweepPoint> sweep_points;  // sweep runs only
};

namespace detail {

inline void write_manifest_file(const std::filesystem::path& path, const RunManifest& m) {
    const ScenarioSpec& s = m.spec;
    std::ofstream out(path);
    if (!out)
        throw IoError("write_manifest_file: cannot open " + path.string());
    out << "[run]\n";
    out << "name = " << s.name << "\n";
    out << "version = " << m.version << "\n";
    out << "cutoff_a = " << s.cutoff_a << "\n";
    out << "cutoff_b = " << s.cutoff_b << "\n";
    out << "transient_cut = " << fmt(s.transient_cut) << "\n";
    out << "top_population_a = " << fmt(m.top_a) << "\n";
    out << "top_population_b = " << fmt(m.top_b) << "\n";
    out << "duration_seconds = " << fmt(m.duration_seconds) << "\n";
    out << "\n[model]\n";
    out << "delta_ph = " << fmt(s.model.delta_ph) << "\n";
    out << "delta_ex = " << fmt(s.model.delta_ex) << "\n";
    out << "chi = " << fmt(s.model.chi) << "\n";
    out << "g = " << fmt(s.model.g) << "\n";
    out << "omega1 = " << fmt(s.model.omega1) << "\n";
    out << "omega2 = " << fmt(s.model.omega2) << "\n";
    out << "delta_mod = " << fmt(s.model.delta_mod) << "\n";
    out << "gamma_a = " << fmt(s.model.gamma_a) << "\n";
    out << "gamma_b = " << fmt(s.model.gamma_b) << "\n";
    out << "n_th = " << fmt(s.model.n_th) << "\n";
    out << "\n[initial]\n";
    out << "state = " << (s.init.is_vacuum ? "vacuum" : "fock") << "\n";
    if (!s.init.is_vacuum) {
        out << "n_a = " << s.init.n_a << "\n";
        out << "n_b = " << s.init.n_b << "\n";
    }
    out << "\n[evolution]\n";
    out << "t_end = " << fmt(s.evolution.t_end) << "\n";
    out << "dt = " << fmt(s.evolution.dt) << "\n";
    out << "sample_every = " << s.evolution.sample_every << "\n";
    out << "\n[trajectories]\n";
    out << "enabled = " << (s.trajectories_enabled ? "true" : "false") << "\n";
    out << "n_traj = " << s.trajectories.n_traj << "\n";
    out << "master_seed = " << s.trajectories.master_seed << "\n";
    out << "unraveling = "
        << (s.trajectories.unraveling == Unraveling::jump ? "jump" : "diffusion") << "\n";
    out << "\n[output]\n";
    out << "wigner_grid_n = " << s.output.wigner_grid_n << "\n";
    out << "wigner_grid_radius = " << fmt(s.output.wigner_grid_radius) << "\n";
    out << "snapshots = "
        << (s.output.snapshots == SnapshotPolicy::none
                ? "none"
                : (s.output.snapshots == SnapshotPolicy::final_time ? "final" : "extrema"))
        << "\n";
    if (!m.sweep_points.empty()) {
        out << "\n[sweep]\n";
        out << "parameter = " << s.sweep->parameter << "\n";
        for (const SweepPoint& p : m.sweep_points)
            out << "point_" << fmt(p.value) << " = cutoffs " << p.cutoff_a << "x"
                << p.cutoff_b << ", top_a " << fmt(p.top_a) << ", top_b " << fmt(p.top_b)
                << "\n";
    }
    if (!out)
        throw IoError("write_manifest_file: write failed " + path.string());
}

// stage-then-rename so an interrupted run leaves no partial outputs behind
class StagedDir {
public:
    explicit StagedDir(const std::filesystem::path& out_dir) : out_(out_dir) {
        namespace fs = std::filesystem;
        fs::create_directories(out_);
        stage_ = out_ / ".partial";
        fs::remove_all(stage_);
        fs::create_directory(stage_);
    }
    ~StagedDir() {
        if (!committed_) {
            std::error_code ec;
            std::filesystem::remove_all(stage_, ec);
        }
    }
    std::filesystem::path file(const std::string& name) {
        names_.push_back(name);
        return stage_ / name;
    }
    void commit() {
        namespace fs = std::filesystem;
        for (const std::string& n : names_) fs::rename(stage_ / n, out_ / n);
        fs::remove_all(stage_);
        committed_ = true;
    }

private:
    std::filesystem::path out_, stage_;
    std::vector<std::string> names_;
    bool committed_ = false;
};

}  // namespace detail

// ---- orchestrated runs ----

inline RunManifest run_scenario(const ScenarioSpec& spec,
                                const std::filesystem::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioResult res = compute_scenario(spec);

    detail::StagedDir stage(out_dir);
    detail::write_series_file(stage.file("series.csv"), res.series);
    if (res.traj_series)
        detail::write_series_file(stage.file("series_trajectories.csv"), *res.traj_series);
    for (const Snapshot& snap : res.snapshots) {
        detail::write_wigner_file(stage.file("wigner_" + snap.tag + ".csv"), snap.wigner_a);
        detail::write_wigner_file(stage.file("wigner_b_" + snap.tag + ".csv"),
                                  snap.wigner_b);
        detail::write_distribution_file(stage.file("dist_a_" + snap.tag + ".csv"),
                                        snap.dist_a);
        detail::write_distribution_file(stage.file("dist_b_" + snap.tag + ".csv"),
                                        snap.dist_b);
    }
    RunManifest man;
    man.spec = spec;
    man.top_a = res.top_a;
    man.top_b = res.top_b;
    man.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    detail::write_manifest_file(stage.file("manifest.txt"), man);
    stage.commit();
    return man;
}

namespace detail {

inline std::size_t escalate_cutoff(std::size_t current, double max_n, std::size_t floor_step,
                                   std::size_t cap) {
    const double need = std::ceil(max_n + 4.5 * std::sqrt(std::max(max_n, 1.0)) + 4.0);
    auto next = std::max(current + floor_step, static_cast<std::size_t>(need));
    return std::min(next, cap);
}

inline void set_sweep_parameter(ModelParams& m, const std::string& name, double v) {
    if (name == "g") m.g = v;
    else if (name == "chi") m.chi = v;
    else if (name == "omega1") m.omega1 = v;
    else if (name == "omega2") m.omega2 = v;
    else if (name == "delta_mod") m.delta_mod = v;
    else if (name == "n_th") m.n_th = v;
    else throw std::invalid_argument("sweep: unsupported parameter '" + name + "'");
}

}  // namespace detail

// one record per swept value: min-over-time Q_a after the transient cut, with
// per-point cutoff escalation when the truncation guard trips
inline RunManifest sweep(const ScenarioSpec& spec, const std::filesystem::path& out_dir,
                         const std::function<void(const SweepPoint&)>& on_point = {}) {
    if (!spec.sweep) throw std::invalid_argument("sweep: spec has no sweep descriptor");
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();
    constexpr std::size_t kCapA = 64, kCapB = 28;

    std::vector<double> values = spec.sweep->values;
    std::sort(values.begin(), values.end());

    RunManifest man;
    man.spec = spec;
    // occupancy grows along the sorted values in the swept ranges of interest,
    // so each point starts from the cutoffs the previous one needed
    std::size_t cur_ca = spec.cutoff_a, cur_cb = spec.cutoff_b;
    for (double v : values) {
        ScenarioSpec point = spec;
        point.sweep.reset();
        point.output.snapshots = SnapshotPolicy::none;
        point.trajectories_enabled = false;
        point.cutoff_a = cur_ca;
        point.cutoff_b = cur_cb;
        detail::set_sweep_parameter(point.model, spec.sweep->parameter, v);

        for (;;) {
            try {
                ScenarioResult res = compute_scenario(point);
                SweepPoint sp;
                sp.value = v;
                sp.min_q_a = min_after_cut(res.series.times, res.series.q_a,
                                           res.series.valid_a, point.transient_cut);
                sp.cutoff_a = point.cutoff_a;
                sp.cutoff_b = point.cutoff_b;
                sp.top_a = res.top_a;
                sp.top_b = res.top_b;
                man.sweep_points.push_back(sp);
                cur_ca = point.cutoff_a;
                cur_cb = point.cutoff_b;
                if (on_point) on_point(sp);
                break;
            } catch (const TruncationError& err) {
                const auto na = detail::escalate_cutoff(point.cutoff_a, err.max_n_a, 4, kCapA);
                const auto nb = detail::escalate_cutoff(point.cutoff_b, err.max_n_b, 2, kCapB);
                if (na == point.cutoff_a && nb == point.cutoff_b)
                    throw;  // caps reached, give up honestly
                point.cutoff_a = na;
                point.cutoff_b = nb;
            }
        }
    }

    detail::StagedDir stage(out_dir);
    {
        const auto path = stage.file("sweep.csv");
        std::ofstream out(path);
        if (!out) throw IoError("sweep: cannot open " + path.string());
        out << spec.sweep->parameter << ",min_q_a\n";
        for (const SweepPoint& p : man.sweep_points)
            out << detail::fmt(p.value) << ',' << detail::fmt(p.min_q_a) << '\n';
        if (!out) throw IoError("sweep: write failed " + path.string());
    }
    man.top_a = 0.0;
    man.top_b = 0.0;
    for (const SweepPoint& p : man.sweep_points) {
        man.top_a = std::max(man.top_a, p.top_a);
        man.top_b = std::max(man.top_b, p.top_b);
    }
    man.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    detail::write_manifest_file(stage.file("manifest.txt"), man);
    stage.commit();
    return man;
}

// ---- convergence check ----

struct ConvergenceReport {
    double max_rel_n_a = 0.0;
    double max_rel_q_a = 0.0;
    bool pass = false;
    std::size_t base_cutoff_a = 0, base_cutoff_b = 0;
    std::size_t ref_cutoff_a = 0, ref_cutoff_b = 0;
    double base_dt = 0.0, ref_dt = 0.0;
    double horizon = 0.0;
};

// Reruns with doubled cutoffs and halved dt and reports the max relative
// change of <n_a> and Q_a.  <n_a> is compared against the series peak; Q is
// dimensionless and O(1), so its change is measured on max(1, peak |Q|).  The
// horizon is capped to bound the cost of the doubled-cutoff rerun.
inline ConvergenceReport convergence_check(const ScenarioSpec& spec,
                                           double horizon_cap = 10.0) {
    spec.validate();
    ScenarioSpec base = spec;
    base.output.snapshots = SnapshotPolicy::none;
    base.trajectories_enabled = false;
    base.evolution.t_end = std::min(spec.evolution.t_end, horizon_cap);

    ScenarioSpec ref = base;
    ref.cutoff_a = 2 * base.cutoff_a;
    ref.cutoff_b = 2 * base.cutoff_b;
    ref.evolution.dt = 0.5 * base.evolution.dt;
    ref.evolution.sample_every = 2 * base.evolution.sample_every;

    ScenarioResult rb = compute_scenario(base);
    ScenarioResult rr = compute_scenario(ref);
    if (rb.series.size() != rr.series.size())
        throw std::runtime_error("convergence_check: sample grids do not line up");

    double scale_n = 1e-12, scale_q = 1.0;
    for (std::size_t s = 0; s < rb.series.size(); ++s) {
        scale_n = std::max(scale_n, std::abs(rb.series.n_a[s]));
        if (rb.series.valid_a[s]) scale_q = std::max(scale_q, std::abs(rb.series.q_a[s]));
    }
    ConvergenceReport rep;
    for (std::size_t s = 0; s < rb.series.size(); ++s) {
        rep.max_rel_n_a = std::max(rep.max_rel_n_a,
                                   std::abs(rb.series.n_a[s] - rr.series.n_a[s]) / scale_n);
        if (rb.series.valid_a[s] && rr.series.valid_a[s])
            rep.max_rel_q_a = std::max(
                rep.max_rel_q_a, std::abs(rb.series.q_a[s] - rr.series.q_a[s]) / scale_q);
    }
    rep.pass = rep.max_rel_n_a < 1e-3 && rep.max_rel_q_a < 1e-3;
    rep.base_cutoff_a = base.cutoff_a;
    rep.base_cutoff_b = base.cutoff_b;
    rep.ref_cutoff_a = ref.cutoff_a;
    rep.ref_cutoff_b = ref.cutoff_b;
    rep.base_dt = base.evolution.dt;
    rep.ref_dt = ref.evolution.dt;
    rep.horizon = base.evolution.t_end;
    return rep;
}

}  // namespace kerrcav
