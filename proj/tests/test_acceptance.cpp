// test_acceptance.cpp — the ten headline criteria, one verdict line each.
//
// Every criterion prints its clauses with the measured values and then a
// single "criterion N: PASS|FAIL" line; the Catch assertion mirrors that
// verdict.  All tolerances and bands are pinned here, in code.  Scenario
// results are computed once per process and shared across criteria, so the
// binary is expensive but does no redundant work.  Criteria 2, 3, 4, 5 and 7
// assert literature-derived bands that this model, integrated as specified,
// does not reach; they are expected to fail and are kept failing on purpose
// rather than widened (see the repository notes on reproducing the headline
// statistics).

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <kerrcav/scenarios.hpp>

using namespace kerrcav;
namespace fs = std::filesystem;

namespace {

// ---- criterion bookkeeping ----

class Criterion {
  public:
    explicit Criterion(std::string name) : name_(std::move(name)) {}

    // record one clause; fmt describes the measurement, e.g. "minQ_a = %.4f"
    void clause(bool pass, const char* fmt, ...) {
        char buf[512];
        va_list ap;
        va_start(ap, fmt);
        std::vsnprintf(buf, sizeof buf, fmt, ap);
        va_end(ap);
        std::printf("    [%s] %s\n", pass ? " ok " : "FAIL", buf);
        ok_ &= pass;
    }

    void exception(const char* what) {
        std::printf("    [FAIL] unexpected exception: %s\n", what);
        ok_ = false;
    }

    // prints the verdict line and mirrors it into Catch
    void finish() {
        std::printf("%s: %s\n", name_.c_str(), ok_ ? "PASS" : "FAIL");
        std::fflush(stdout);
        CHECK(ok_);
    }

  private:
    std::string name_;
    bool ok_ = true;
};

// ---- shared run cache ----

const ScenarioResult& cached(const std::string& key,
                             const std::function<ScenarioSpec()>& make) {
    static std::map<std::string, ScenarioResult> store;
    auto it = store.find(key);
    if (it == store.end()) {
        std::printf("    [run ] computing %s ...\n", key.c_str());
        std::fflush(stdout);
        it = store.emplace(key, compute_scenario(make())).first;
    }
    return it->second;
}

ScenarioSpec fig7_spec(double n_th) {
    auto s = preset(PresetId::fig7);
    s.model.n_th = n_th;
    return s;
}

// reduced copy of the fig3 preset used for the trajectory cross-check; the
// comparison tests solver agreement, not truncation, so a shorter horizon
// keeps 2000 trajectories affordable.  The transient swings <n_a> up to ~7,
// so the photon cutoff cannot drop below 18 without tripping the guard.
ScenarioSpec traj_spec() {
    auto s = preset(PresetId::fig3);
    s.cutoff_a = 18;
    s.evolution.t_end = 25.0;
    s.output.snapshots = SnapshotPolicy::none;
    s.trajectories_enabled = true;
    return s;
}

const RunManifest& cached_sweep(double chi) {
    static std::map<double, RunManifest> store;
    auto it = store.find(chi);
    if (it == store.end()) {
        auto spec = preset(PresetId::fig6);
        spec.model.chi = chi;
        char dir[128];
        std::snprintf(dir, sizeof dir, "%s/kerrcav_acceptance_sweep_chi%g",
                      fs::temp_directory_path().c_str(), chi);
        fs::remove_all(dir);
        std::printf("    [run ] sweeping g at chi = %g ...\n", chi);
        std::fflush(stdout);
        it = store.emplace(chi, sweep(spec, dir)).first;
    }
    return it->second;
}

// ---- small helpers ----

std::vector<bool> all_valid(std::size_t n) { return std::vector<bool>(n, true); }

double grid_integral(const WignerGrid& w) {
    double h_re = w.re_alpha[1] - w.re_alpha[0];
    double h_im = w.im_alpha[1] - w.im_alpha[0];
    return w.values.sum() * h_re * h_im;
}

const Snapshot& snapshot(const ScenarioResult& r, const std::string& tag) {
    for (const auto& s : r.snapshots)
        if (s.tag == tag) return s;
    throw std::runtime_error("missing snapshot " + tag);
}

// worst relative deviation from periodicity with period T over t >= t_lo:
// for each observable, max |f(t) - f(t+T)| / max |f|, f(t+T) linearly
// interpolated between samples
double periodicity_residual(const ObservableSeries& s, double T, double t_lo) {
    const std::vector<double>* fields[6] = {&s.n_a, &s.n_b, &s.q_a,
                                            &s.q_b, &s.g2_a, &s.g2_b};
    const std::vector<bool>* masks[6] = {nullptr, nullptr, &s.valid_a,
                                         &s.valid_b, &s.valid_a, &s.valid_b};
    const double t_end = s.times.back();
    double worst_rel = 0.0;
    for (int f = 0; f < 6; ++f) {
        const auto& v = *fields[f];
        double scale = 0.0, worst = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.times[i] < t_lo) continue;
            if (masks[f] && !(*masks[f])[i]) continue;
            scale = std::max(scale, std::fabs(v[i]));
        }
        if (scale == 0.0) continue;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double t = s.times[i];
            if (t < t_lo || t + T > t_end) continue;
            if (masks[f] && !(*masks[f])[i]) continue;
            const double tau = t + T;
            auto it = std::lower_bound(s.times.begin(), s.times.end(), tau);
            const auto j = static_cast<std::size_t>(it - s.times.begin());
            if (j == 0 || j >= s.size()) continue;
            if (masks[f] && (!(*masks[f])[j - 1] || !(*masks[f])[j])) continue;
            const double w = (tau - s.times[j - 1]) / (s.times[j] - s.times[j - 1]);
            worst = std::max(worst, std::fabs(v[i] - ((1.0 - w) * v[j - 1] + w * v[j])));
        }
        worst_rel = std::max(worst_rel, worst / scale);
    }
    return worst_rel;
}

}  // namespace

// ---- criteria ----

TEST_CASE("criterion 1: closed-system conservation and revival") {
    Criterion c("criterion 1");
    try {
        const auto& r = cached("fig1", [] { return preset(PresetId::fig1); });
        const auto& s = r.series;

        double drift = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            drift = std::max(drift, std::fabs(s.n_a[i] + s.n_b[i] - 4.0));
        c.clause(drift <= 1e-6, "max |n_a + n_b - 4| = %.2e (tol 1e-6)", drift);

        // envelope = local maxima of <n_a>; non-monotone means some peak sits
        // strictly below both an earlier and a later peak
        std::vector<double> peaks;
        for (std::size_t i = 1; i + 1 < s.size(); ++i)
            if (s.n_a[i] >= s.n_a[i - 1] && s.n_a[i] > s.n_a[i + 1])
                peaks.push_back(s.n_a[i]);
        bool revival = false;
        for (std::size_t j = 1; j + 1 < peaks.size() && !revival; ++j) {
            double before = *std::max_element(peaks.begin(), peaks.begin() + j);
            double after = *std::max_element(peaks.begin() + j + 1, peaks.end());
            revival = peaks[j] < before && peaks[j] < after;
        }
        c.clause(revival, "collapse-revival envelope (%zu peaks, min %.4f)",
                 peaks.size(),
                 peaks.empty() ? 0.0 : *std::min_element(peaks.begin(), peaks.end()));
    } catch (const std::exception& e) {
        c.exception(e.what());
    }
    c.finish();
}

TEST_CASE("criterion 2: cw baseline statistics") {
    Criterion c("criterion 2");
    try {
        const auto& r = cached("fig2", [] { return preset(PresetId::fig2); });
        const auto& s = r.series;

        const double avg_qa = time_average(s.times, s.q_a, 30.0, 50.0);
        c.clause(avg_qa >= -0.27 && avg_qa <= -0.13,
                 "time-averaged Q_a[30,50] = %.4f (band [-0.27, -0.13])", avg_qa);

        const double min_qb = min_after_cut(s.times, s.q_b, s.valid_b, 30.0);
        c.clause(min_qb > 0.0, "min Q_b[30,50] = %.4f (> 0 required)", min_qb);

        const double wmin = snapshot(r, "final").wigner_a.values.minCoeff();
        c.clause(wmin >= -0.005, "late-time photon Wigner min = %.2e (>= -0.005)",
                 wmin);
    } catch (const std::exception& e) {
        c.exception(e.what());
    }
    c.finish();
}

TEST_CASE("criterion 3: modulated drive statistics") {
    Criterion c("criterion 3");
    try {
        const auto& r = cached("fig3", [] { return preset(PresetId::fig3); });
        const auto& s = r.series;

        const double min_qa = min_after_cut(s.times, s.q_a, s.valid_a, 10.0);
        c.clause(min_qa >= -0.75 && min_qa <= -0.55,
                 "min Q_a (t >= 10) = %.4f (band [-0.75, -0.55])", min_qa);

        const double min_qb = min_after_cut(s.times, s.q_b, s.valid_b, 10.0);
        c.clause(min_qb >= -0.55 && min_qb <= -0.35,
                 "min Q_b (t >= 10) = %.4f (band [-0.55, -0.35])", min_qb);

        const double period = 2.0 * M_PI / preset(PresetId::fig3).model.delta_mod;
        const double resid = periodicity_residual(s, period, 20.0);
        c.clause(resid <= 1e-3,
                 "periodicity residual (t >= 20) = %.2e relative (tol 1e-3)", resid);

        const auto& tmax = snapshot(r, "tmax");
        const double wmin_max = tmax.wigner_a.values.minCoeff();
        c.clause(wmin_max < -0.005,
                 "photon Wigner min at t_max = %.2e (< -0.005 required)", wmin_max);

        const auto& tmin = snapshot(r, "tmin");
        const double wmin_min = tmin.wigner_a.values.minCoeff();
        c.clause(wmin_min >= -0.005, "photon Wigner min at t_min = %.2e (>= -0.005)",
                 wmin_min);
        const double qa_tmin = s.q_a[tmin.sample];
        c.clause(std::fabs(qa_tmin) <= 0.1, "|Q_a(t_min)| = %.4f (<= 0.1)",
                 std::fabs(qa_tmin));
    } catch (const std::exception& e) {
        c.exception(e.what());
    }
    c.finish();
}

TEST_CASE("criterion 4: deep sub-Poissonian regime") {
    Criterion c("criterion 4");
    try {
        const auto& r = cached("fig4", [] { return preset(PresetId::fig4); });
        const auto& s = r.series;

        const double min_qa = min_after_cut(s.times, s.q_a, s.valid_a, 10.0);
        c.clause(min_qa >= -0.9 && min_qa <= -0.7,
                 "min Q_a = %.4f (band [-0.9, -0.7])", min_qa);

        const double min_qb = min_after_cut(s.times, s.q_b, s.valid_b, 10.0);
        c.clause(min_qb >= -0.6 && min_qb <= -0.4,
                 "min Q_b = %.4f (band [-0.6, -0.4])", min_qb);

        // g2_b stays inside its band with a small swing over the window
        const double g2b_lo = min_after_cut(s.times, s.g2_b, s.valid_b, 10.0);
        const double g2b_hi = max_after_cut(s.times, s.g2_b, s.valid_b, 10.0);
        c.clause(g2b_lo >= 0.71 && g2b_hi <= 0.81,
                 "g2_b in [%.4f, %.4f] (band [0.71, 0.81])", g2b_lo, g2b_hi);
        c.clause(g2b_hi - g2b_lo < 0.1, "g2_b swing = %.4f (< 0.1)",
                 g2b_hi - g2b_lo);

        const double min_g2a = min_after_cut(s.times, s.g2_a, s.valid_a, 10.0);
        c.clause(min_g2a >= 0.77 && min_g2a <= 0.87,
                 "min g2_a = %.4f (band [0.77, 0.87])", min_g2a);

        const double max_g2a = max_after_cut(s.times, s.g2_a, s.valid_a, 10.0);
        c.clause(max_g2a < 1.0 && g2b_hi < 1.0,
                 "anti-bunching: max g2_a = %.4f, max g2_b = %.4f (both < 1)",
                 max_g2a, g2b_hi);
    } catch (const std::exception& e) {
        c.exception(e.what());
    }
    c.finish();
}

TEST_CASE("criterion 5: number distributions at the extrema") {
    Criterion c("criterion 5");
    try {
        // the fig5 preset shares the fig4 evolution; assert that and read the
        // distributions from the cached fig4 run
        const auto f4 = preset(PresetId::fig4);
        const auto f5 = preset(PresetId::fig5);
        const bool same = f4.model.chi == f5.model.chi && f4.model.g == f5.model.g &&
                          f4.model.omega1 == f5.model.omega1 &&
                          f4.model.omega2 == f5.model.omega2 &&
                          f4.model.delta_mod == f5.model.delta_mod &&
                          f4.cutoff_a == f5.cutoff_a && f4.cutoff_b == f5.cutoff_b &&
                          f4.evolution.t_end == f5.evolution.t_end;
        c.clause(same, "fig5 preset shares the fig4 evolution");

        const auto& r = cached("fig4", [] { return preset(PresetId::fig4); });
        for (const auto& snap : r.snapshots) {
            for (const auto* dist : {&snap.dist_a, &snap.dist_b}) {
                double sum = 0.0;
                for (double p : dist->probabilities) sum += p;
                c.clause(std::fabs(sum - 1.0) <= 1e-6,
                         "%s %s distribution sums to %.8f (tol 1e-6)",
                         snap.tag.c_str(),
                         dist == &snap.dist_a ? "photon" : "exciton", sum);
            }
            const double na = r.series.n_a[snap.sample];
            const auto want = static_cast<std::size_t>(std::lround(na));
            c.clause(snap.dist_a.argmax() == want,
                     "%s photon argmax = %zu, nearest integer to <n_a>=%.3f is %zu",
                     snap.tag.c_str(), snap.dist_a.argmax(), na, want);
        }

        // sub-Poissonian width at the occupation maximum, straight from the
        // emitted distribution
        const auto& tmax = snapshot(r, "tmax");
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t n = 0; n < tmax.dist_a.probabilities.size(); ++n) {
            m1 += double(n) * tmax.dist_a.probabilities[n];
            m2 += double(n) * double(n) * tmax.dist_a.probabilities[n];
        }
        const double var = m2 - m1 * m1;
        c.clause(var < m1, "photon variance at t_max = %.4f vs Poissonian %.4f",
                 var, m1);
    } catch (const std::exception& e) {
        c.exception(e.what());
    }
    c.finish();
}

TEST_CASE("criterion 6: optimal coupling sweep") {
    Criterion c("criterion 6");
    try {
        const auto& values = preset(PresetId::fig6).sweep->values;
        std::map<double, std::vector<double>> curves;
        for (double chi : {1.0, 3.0, 5.0}) {
            const auto& man = cached_sweep(chi);
            std::vector<double> curve;
            for (const auto& pt : man.sweep_points) curve.push_back(pt.min_q_a);
            curves[chi] = std::move(curve);
        }

        const auto& c3 = curves[3.0];
        const auto am = static_cast<std::size_t>(
            std::min_element(c3.begin(), c3.end()) - c3.begin());
        const double g_opt = values[am];
        c.clause(am > 0 && am + 1 < c3.size() && g_opt > 1.0 && g_opt < 12.0,
                 "chi=3 optimum at g = %.1f with min Q_a = %.4f (interior of (1,12))",
                 g_opt, c3[am]);

        const double pairs[3][2] = {{1.0, 3.0}, {1.0, 5.0}, {3.0, 5.0}};
        for (const auto& pr : pairs) {
            double gap = 0.0;
            for (std::size_t k = 0; k < values.size(); ++k)
                gap = std::max(gap,
                               std::fabs(curves[pr[0]][k] - curves[pr[1]][k]));
            c.clause(gap > 0.02, "curves chi=%g and chi=%g max gap = %.4f (> 0.02)",
                     pr[0], pr[1], gap);
        }
    } catch (const std::exception& e) {
        c.exception(e.what());
    }
    c.finish();
}

TEST_CASE("criterion 7: thermal degradation") {
    Criterion c("criterion 7");
    try {
        const auto& warm = cached("fig7@0.05", [] { return fig7_spec(0.05); });
        const auto& hot = cached("fig7@1", [] { return fig7_spec(1.0); });
        const auto& cold = cached("fig3", [] { return preset(PresetId::fig3); });

        const auto& sw = warm.series;
        const double max_qa = max_after_cut(sw.times, sw.q_a, sw.valid_a, 10.0);
        c.clause(max_qa < 0.0, "n_th=0.05: max Q_a (t >= 10) = %.4f (< 0)", max_qa);
        const double max_g2a = max_after_cut(sw.times, sw.g2_a, sw.valid_a, 10.0);
        c.clause(max_g2a < 1.0, "n_th=0.05: max g2_a (t >= 10) = %.4f (< 1)",
                 max_g2a);

        const double min_qa_cold =
            min_after_cut(cold.series.times, cold.series.q_a, cold.series.valid_a, 10.0);
        const double min_qa_warm = min_after_cut(sw.times, sw.q_a, sw.valid_a, 10.0);
        c.clause(std::fabs(min_qa_warm - min_qa_cold) < 0.1,
                 "|min Q_a(0.05) - min Q_a(0)| = |%.4f - %.4f| = %.4f (< 0.1)",
                 min_qa_warm, min_qa_cold, std::fabs(min_qa_warm - min_qa_cold));

        const double min_qa_hot =
            min_after_cut(hot.series.times, hot.series.q_a, hot.series.valid_a, 10.0);
        c.clause(min_qa_hot > min_qa_cold,
                 "min Q_a(1) = %.4f > min Q_a(0) = %.4f", min_qa_hot, min_qa_cold);

        const auto va = all_valid(sw.size());
        const double peak_warm = max_after_cut(sw.times, sw.n_a, va, 10.0);
        const auto vc = all_valid(cold.series.size());
        const double peak_cold =
            max_after_cut(cold.series.times, cold.series.n_a, vc, 10.0);
        c.clause(std::fabs(peak_warm - peak_cold) <= 0.1 * peak_cold,
                 "peak <n_a>: %.4f at n_th=0.05 vs %.4f at n_th=0 (within 10%%)",
                 peak_warm, peak_cold);
    } catch (const std::exception& e) {
        c.exception(e.what());
    }
    c.finish();
}

TEST_CASE("criterion 8: analytic oracles") {
    Criterion c("criterion 8");
    try {
        {  // linear driven cavity
            ScenarioSpec sp;
            sp.name = "oracle-linear";
            sp.model.delta_ph = 1.0;
            sp.model.gamma_a = 2.0;
            sp.model.gamma_b = 0.0;
            sp.model.omega1 = 0.5;
            sp.model.g = 0.0;
            sp.model.chi = 0.0;
            sp.cutoff_a = 12;
            sp.cutoff_b = 2;
            sp.evolution.t_end = 15.0;
            const auto r = compute_scenario(sp);
            const double n_exp = 0.5 * 0.5 / (1.0 * 1.0 + 2.0 * 2.0 / 4.0);
            const double n = r.series.n_a.back(), q = r.series.q_a.back();
            c.clause(std::fabs(n - n_exp) <= 1e-4 * n_exp,
                     "driven cavity <n> = %.6f vs W^2/(D^2+g^2/4) = %.6f (rel 1e-4)",
                     n, n_exp);
            c.clause(std::fabs(q) <= 1e-6, "driven cavity Q = %.2e (tol 1e-6)", q);
        }
        {  // single-photon decay
            ScenarioSpec sp;
            sp.name = "oracle-decay";
            sp.model.gamma_a = 1.0;
            sp.model.gamma_b = 0.0;
            sp.model.g = 0.0;
            sp.model.chi = 0.0;
            sp.init = {false, 1, 0};
            sp.cutoff_a = 4;
            sp.cutoff_b = 2;
            sp.evolution.t_end = 8.0;
            const auto r = compute_scenario(sp);
            double worst = 0.0;
            for (std::size_t i = 0; i < r.series.size(); ++i)
                worst = std::max(worst, std::fabs(r.series.n_a[i] -
                                                  std::exp(-r.series.times[i])));
            c.clause(worst <= 1e-6, "decay max |<n> - e^-t| = %.2e (tol 1e-6)",
                     worst);
        }
        {  // resonant single-excitation Rabi exchange
            ScenarioSpec sp;
            sp.name = "oracle-rabi";
            sp.model.gamma_a = sp.model.gamma_b = 0.0;
            sp.model.delta_ph = sp.model.delta_ex = 7.12;
            sp.model.g = 2.5;
            sp.model.chi = 3.0;  // inert in the single-excitation sector
            sp.init = {false, 1, 0};
            sp.cutoff_a = 3;
            sp.cutoff_b = 3;
            sp.evolution.t_end = 6.0;
            const auto r = compute_scenario(sp);
            double worst = 0.0;
            for (std::size_t i = 0; i < r.series.size(); ++i) {
                const double cs = std::cos(2.5 * r.series.times[i]);
                worst = std::max(worst, std::fabs(r.series.n_a[i] - cs * cs));
            }
            c.clause(worst <= 1e-6, "Rabi max |<n_a> - cos^2(gt)| = %.2e (tol 1e-6)",
                     worst);
        }
        {  // thermal-only steady state
            ScenarioSpec sp;
            sp.name = "oracle-thermal";
            sp.model.delta_ph = 1.0;
            sp.model.gamma_a = 1.0;
            sp.model.gamma_b = 0.0;
            sp.model.g = 0.0;
            sp.model.chi = 0.0;
            sp.model.n_th = 0.3;
            sp.cutoff_a = 16;
            sp.cutoff_b = 2;
            sp.evolution.t_end = 20.0;
            const auto r = compute_scenario(sp);
            const double n = r.series.n_a.back();
            c.clause(std::fabs(n - 0.3) <= 1e-4 * 0.3,
                     "thermal <n> = %.6f vs n_th = 0.3 (rel 1e-4)", n);
        }
    } catch (const std::exception& e) {
        c.exception(e.what());
    }
    c.finish();
}

TEST_CASE("criterion 9: trajectory ensemble vs master equation") {
    Criterion c("criterion 9");
    try {
        const auto& r = cached("traj9", traj_spec);
        const auto& me = r.series;
        const auto& mc = *r.traj_series;
        const auto& tr = *r.traj_record;

        double worst_a = 0.0, worst_b = 0.0;
        bool exact_at_zero_se = true;
        for (std::size_t i = 0; i < me.size(); ++i) {
            if (tr.se_n_a[i] > 0.0)
                worst_a = std::max(worst_a,
                                   std::fabs(mc.n_a[i] - me.n_a[i]) / tr.se_n_a[i]);
            else
                exact_at_zero_se &= mc.n_a[i] == me.n_a[i];
            if (tr.se_n_b[i] > 0.0)
                worst_b = std::max(worst_b,
                                   std::fabs(mc.n_b[i] - me.n_b[i]) / tr.se_n_b[i]);
            else
                exact_at_zero_se &= mc.n_b[i] == me.n_b[i];
        }
        c.clause(worst_a <= 3.0 && exact_at_zero_se,
                 "<n_a> worst pull = %.2f standard errors (<= 3)", worst_a);
        c.clause(worst_b <= 3.0, "<n_b> worst pull = %.2f standard errors (<= 3)",
                 worst_b);

        // same seed, different worker count: byte-identical ensemble means
        auto sp = traj_spec();
        sp.trajectories.n_workers = 4;
        const auto again = compute_scenario(sp);
        const auto& mc2 = *again.traj_series;
        const auto bytes = [](const std::vector<double>& a,
                              const std::vector<double>& b) {
            return a.size() == b.size() &&
                   std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
        };
        c.clause(bytes(mc.n_a, mc2.n_a) && bytes(mc.n_b, mc2.n_b) &&
                     bytes(mc.q_a, mc2.q_a) && bytes(mc.g2_a, mc2.g2_a),
                 "rerun with 4 workers is byte-identical");
    } catch (const std::exception& e) {
        c.exception(e.what());
    }
    c.finish();
}

TEST_CASE("criterion 10: identities, invariants and convergence") {
    Criterion c("criterion 10");
    try {
        const char* keys[6] = {"fig1", "fig2", "fig3", "fig4", "fig7@0.05", "fig7@1"};
        const std::function<ScenarioSpec()> makers[6] = {
            [] { return preset(PresetId::fig1); },
            [] { return preset(PresetId::fig2); },
            [] { return preset(PresetId::fig3); },
            [] { return preset(PresetId::fig4); },
            [] { return fig7_spec(0.05); },
            [] { return fig7_spec(1.0); }};

        double worst_id = 0.0, worst_tr = 0.0, worst_he = 0.0, worst_eig = 0.0;
        double worst_norm = 0.0;
        auto scan_series = [&](const ObservableSeries& s) {
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (s.valid_a[i])
                    worst_id = std::max(worst_id,
                                        std::fabs(s.q_a[i] -
                                                  s.n_a[i] * (s.g2_a[i] - 1.0)));
                if (s.valid_b[i])
                    worst_id = std::max(worst_id,
                                        std::fabs(s.q_b[i] -
                                                  s.n_b[i] * (s.g2_b[i] - 1.0)));
            }
        };
        for (int k = 0; k < 6; ++k) {
            const auto& r = cached(keys[k], makers[k]);
            scan_series(r.series);
            for (std::size_t i = 0; i < r.record.size(); ++i) {
                worst_tr = std::max(worst_tr, r.record.trace_err[i]);
                worst_he = std::max(worst_he, r.record.herm_err[i]);
                if (!std::isnan(r.record.min_eig[i]))
                    worst_eig = std::min(worst_eig, r.record.min_eig[i]);
            }
            for (const auto& snap : r.snapshots) {
                worst_norm = std::max(worst_norm,
                                      std::fabs(grid_integral(snap.wigner_a) - 1.0));
                worst_norm = std::max(worst_norm,
                                      std::fabs(grid_integral(snap.wigner_b) - 1.0));
            }
        }
        const auto& traj = cached("traj9", traj_spec);
        scan_series(*traj.traj_series);

        c.clause(worst_id <= 1e-9,
                 "Q = <n>(g2 - 1): worst deviation %.2e (tol 1e-9)", worst_id);
        c.clause(worst_tr <= 1e-6 && worst_he <= 1e-8 && worst_eig >= -1e-6,
                 "density checks: trace %.1e (<=1e-6), herm %.1e (<=1e-8), "
                 "min eig %.1e (>=-1e-6)",
                 worst_tr, worst_he, worst_eig);
        c.clause(worst_norm <= 1e-2,
                 "Wigner grid normalization: worst |integral - 1| = %.2e (tol 1e-2)",
                 worst_norm);

        // convergence at doubled cutoffs and halved dt; fig5 shares the fig4
        // model, evolution and cutoffs, so one check covers both
        for (auto id : {PresetId::fig2, PresetId::fig3, PresetId::fig4}) {
            std::printf("    [run ] convergence_check %s ...\n",
                        to_string(id).c_str());
            std::fflush(stdout);
            const auto rep = convergence_check(preset(id));
            const bool covers5 = id == PresetId::fig4;
            c.clause(rep.pass,
                     "convergence %s%s: rel n_a %.2e, rel Q_a %.2e (tol 1e-3, "
                     "%zux%zu -> %zux%zu)",
                     to_string(id).c_str(), covers5 ? " (and fig5)" : "",
                     rep.max_rel_n_a, rep.max_rel_q_a, rep.base_cutoff_a,
                     rep.base_cutoff_b, rep.ref_cutoff_a, rep.ref_cutoff_b);
        }
    } catch (const std::exception& e) {
        c.exception(e.what());
    }
    c.finish();
}
