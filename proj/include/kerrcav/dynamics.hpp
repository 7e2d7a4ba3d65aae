// dynamics.hpp — time evolution: closed-system Schrodinger propagation, direct
// Lindblad integration, and stochastic trajectory ensembles.
//
// The two-mode generator is banded in the photon-major product basis
// k = n_a*C_b + n_b, so the right-hand side is assembled from diagonal-scaled
// shifted blocks instead of superoperator matrices.  Truncation guards live in
// the coefficient vectors: entries that would couple across the cutoff are
// zero, which keeps the trace an exact linear invariant of the stepper.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "model.hpp"

namespace kerrcav {

// ---- configuration ----

enum class Integrator { rk4 };

struct EvolutionConfig {
    double t_end = 50.0;
    double dt = 1e-3;
    std::size_t sample_every = 10;
    Integrator integrator = Integrator::rk4;

    void validate() const {
        if (!(t_end > 0.0) || !std::isfinite(t_end))
            throw std::invalid_argument("EvolutionConfig: t_end must be > 0");
        if (!(dt > 0.0) || dt > 0.01)
            throw std::invalid_argument("EvolutionConfig: dt must satisfy 0 < dt <= 0.01");
        if (sample_every < 1)
            throw std::invalid_argument("EvolutionConfig: sample_every must be >= 1");
    }
    std::size_t n_steps() const {
        auto n = static_cast<std::size_t>(std::llround(t_end / dt));
        if (n < 1) throw std::invalid_argument("EvolutionConfig: t_end smaller than dt");
        return n;
    }
};

enum class Unraveling { jump, diffusion };

struct TrajectoryConfig {
    std::size_t n_traj = 1;
    std::uint64_t master_seed = 0;
    Unraveling unraveling = Unraveling::jump;
    std::size_t n_workers = 1;  // reduction is worker-count independent

    void validate() const {
        if (n_traj < 1) throw std::invalid_argument("TrajectoryConfig: n_traj must be >= 1");
        if (n_workers < 1)
            throw std::invalid_argument("TrajectoryConfig: n_workers must be >= 1");
    }
};

// ---- evolution record ----

// Reduced single-mode snapshots at every sample plus per-sample invariant
// diagnostics.  min_eig holds the full-state smallest eigenvalue where it was
// computed and NaN where the check was skipped for cost.
struct EvolutionRecord {
    CompositeSpace space{ModeSpace(2), ModeSpace(2)};
    std::vector<double> times;
    std::vector<Matrix> rho_a;  // reduced photon mode
    std::vector<Matrix> rho_b;  // reduced exciton mode
    std::vector<double> trace_err;
    std::vector<double> herm_err;
    std::vector<double> min_eig;
    std::vector<double> se_n_a;  // ensemble standard errors, trajectory runs only
    std::vector<double> se_n_b;
    std::size_t n_traj = 0;  // 0 for deterministic runs

    std::size_t size() const { return times.size(); }
};

inline double diag_mean_number(const Matrix& rho) {
    double s = 0.0;
    for (Eigen::Index n = 0; n < rho.rows(); ++n) s += double(n) * rho(n, n).real();
    return s;
}

// ---- banded generator ----

class BandedGenerator {
public:
    BandedGenerator(const ModelParams& p, const CompositeSpace& space)
        : drive_(drive_of(p)), g_(p.g) {
        p.validate();
        Ca_ = static_cast<Eigen::Index>(space.photon.cutoff);
        Cb_ = static_cast<Eigen::Index>(space.exciton.cutoff);
        D_ = Ca_ * Cb_;
        S_ = D_ - Cb_;
        S1_ = S_ + 1;
        r_[0] = (p.n_th + 1.0) * p.gamma_a;
        r_[1] = p.n_th * p.gamma_a;
        r_[2] = (p.n_th + 1.0) * p.gamma_b;
        r_[3] = p.n_th * p.gamma_b;

        e_.resize(D_);
        damp_.resize(D_);
        wa_.resize(S_);
        wb_.resize(D_ - 1);
        wbda_.resize(S1_);
        for (Eigen::Index k = 0; k < D_; ++k) {
            const double na = static_cast<double>(k / Cb_);
            const double nb = static_cast<double>(k % Cb_);
            e_(k) = p.delta_ph * na + p.delta_ex * nb + p.chi * nb * (nb - 1.0);
            const double sa = (k / Cb_ + 1 < Ca_) ? na + 1.0 : 0.0;  // guarded a a† diag
            const double sb = (k % Cb_ + 1 < Cb_) ? nb + 1.0 : 0.0;  // guarded b b† diag
            damp_(k) = r_[0] * na + r_[1] * sa + r_[2] * nb + r_[3] * sb;
            if (k < S_) wa_(k) = std::sqrt(na + 1.0);        // (a X)[k] = wa[k] X[k+Cb]
            if (k < D_ - 1) wb_(k) = (k % Cb_ + 1 < Cb_) ? std::sqrt(nb + 1.0) : 0.0;
            if (k < S1_)                                     // (b†a X)[k] = wbda[k] X[k+Cb-1]
                wbda_(k) = std::sqrt(nb) * std::sqrt(na + 1.0);
        }
        kdiag_ = e_.cast<cplx>() - cplx(0.0, 0.5) * damp_.cast<cplx>();
        // mixed real*complex products do not vectorize; keep complex casts for
        // scalar-driven bands and duplicated-real copies for real-weight bands
        // applied to interleaved re/im data
        wa_c_ = wa_.cast<cplx>();
        wbda_c_ = wbda_.cast<cplx>();
        wa2_.resize(2 * S_);
        wb2_.resize(2 * (D_ - 1));
        wbda2g_.resize(2 * S1_);
        for (Eigen::Index k = 0; k < S_; ++k) wa2_(2 * k) = wa2_(2 * k + 1) = wa_(k);
        for (Eigen::Index k = 0; k < D_ - 1; ++k) wb2_(2 * k) = wb2_(2 * k + 1) = wb_(k);
        for (Eigen::Index k = 0; k < S1_; ++k)
            wbda2g_(2 * k) = wbda2g_(2 * k + 1) = g_ * wbda_(k);
    }

    Eigen::Index dim() const { return D_; }
    double rate(int ch) const { return r_[ch]; }
    const Eigen::ArrayXd& damping() const { return damp_; }

    // G = K X with K = H(t) - (i/2) sum L†L; fused per column so the working
    // set stays cache resident
    void apply_k(const Matrix& X, double t, Matrix& G) const {
        const cplx W = drive_.at(t);
        const cplx Wc = std::conj(W);
        const bool drive = W != cplx(0.0, 0.0);
        const bool couple = g_ != 0.0;
        for (Eigen::Index j = 0; j < D_; ++j) {
            auto x = X.col(j);
            auto gc = G.col(j);
            gc.array() = kdiag_ * x.array();
            if (drive) {
                gc.head(S_).array() += W * (wa_ * x.tail(S_).array());
                gc.tail(S_).array() += Wc * (wa_ * x.head(S_).array());
            }
            if (couple) {
                gc.head(S1_).array() += g_ * (wbda_ * x.tail(S1_).array());
                gc.tail(S1_).array() += g_ * (wbda_ * x.head(S1_).array());
            }
        }
    }

    // out = -i(K rho - rho K†) + sum_i L_i rho L_i† for HERMITIAN rho.
    // Hermiticity turns the adjoint term into (K rho)† = rho K†, whose columns
    // are five-band combinations of rho's columns, so the whole right-hand
    // side fuses into one cache-friendly sweep with no transposed pass.
    void master_rhs(const Matrix& rho, double t, Matrix& out, Matrix& scratch) const {
        const cplx W = drive_.at(t);
        const cplx Wc = std::conj(W);
        const bool drive = W != cplx(0.0, 0.0);
        const bool couple = g_ != 0.0;
        const Eigen::Index E = D_ - 1;
        auto v = scratch.col(0);
        auto vr = as_real(v.data(), D_);
        // drive weights prescaled once per call; W depends on t only
        auto waW = scratch.col(1).head(S_).array();
        auto waWc = scratch.col(2).head(S_).array();
        if (drive) {
            waW = W * wa_c_;
            waWc = Wc * wa_c_;
        }
        for (Eigen::Index j = 0; j < D_; ++j) {
            auto x = rho.col(j);
            auto xr = as_real(x.data(), D_);
            // v = (K rho).col(j)
            v.array() = kdiag_ * x.array();
            if (drive) {
                v.head(S_).array() += waW * x.tail(S_).array();
                v.tail(S_).array() += waWc * x.head(S_).array();
            }
            if (couple) {
                vr.head(2 * S1_) += wbda2g_ * xr.tail(2 * S1_);
                vr.tail(2 * S1_) += wbda2g_ * xr.head(2 * S1_);
            }
            // v -= (rho K†).col(j)
            v -= std::conj(kdiag_(j)) * x;
            if (drive) {
                if (j < S_) v -= (Wc * wa_(j)) * rho.col(j + Cb_);
                if (j >= Cb_) v -= (W * wa_(j - Cb_)) * rho.col(j - Cb_);
            }
            if (couple) {
                if (j < S1_)
                    as_real(v.data(), D_) -=
                        (g_ * wbda_(j)) * as_real(rho.col(j + Cb_ - 1).data(), D_);
                if (j >= Cb_ - 1)
                    as_real(v.data(), D_) -= (g_ * wbda_(j - Cb_ + 1)) *
                                             as_real(rho.col(j - Cb_ + 1).data(), D_);
            }
            auto o = out.col(j);
            o = cplx(0.0, -1.0) * v;
            auto or_ = as_real(o.data(), D_);
            // jump blocks, indexed by the output column
            if (r_[0] > 0.0 && j < S_)
                or_.head(2 * S_) +=
                    (r_[0] * wa_(j)) *
                    (wa2_ * as_real(rho.col(j + Cb_).data() + Cb_, S_));
            if (r_[1] > 0.0 && j >= Cb_)
                or_.segment(2 * Cb_, 2 * S_) +=
                    (r_[1] * wa_(j - Cb_)) * (wa2_ * as_real(rho.col(j - Cb_).data(), S_));
            if (r_[2] > 0.0 && j < E && wb_(j) != 0.0)
                or_.head(2 * E) +=
                    (r_[2] * wb_(j)) * (wb2_ * as_real(rho.col(j + 1).data() + 1, E));
            if (r_[3] > 0.0 && j >= 1 && wb_(j - 1) != 0.0)
                or_.tail(2 * E) +=
                    (r_[3] * wb_(j - 1)) * (wb2_ * as_real(rho.col(j - 1).data(), E));
        }
    }

    // out = H(t) psi, or H_eff(t) psi when with_damping
    void apply_h(const Vector& psi, double t, Vector& out, bool with_damping) const {
        if (with_damping)
            out.array() = psi.array() * kdiag_;
        else
            out.array() = psi.array() * e_.cast<cplx>();
        const cplx W = drive_.at(t);
        if (W != cplx(0.0, 0.0)) {
            out.head(S_).array() += W * (psi.tail(S_).array() * wa_c_);
            out.tail(S_).array() += std::conj(W) * (psi.head(S_).array() * wa_c_);
        }
        if (g_ != 0.0) {
            as_real(out.data(), D_).head(2 * S1_) +=
                wbda2g_ * as_real(psi.data(), D_).tail(2 * S1_);
            as_real(out.data(), D_).tail(2 * S1_) +=
                wbda2g_ * as_real(psi.data(), D_).head(2 * S1_);
        }
    }

    // out = L_ch psi; channels: 0 -> √r1 a, 1 -> √r2 a†, 2 -> √r3 b, 3 -> √r4 b†
    void apply_channel(int ch, const Vector& psi, Vector& out) const {
        out.setZero(D_);
        const double s = std::sqrt(r_[ch]);
        const Eigen::Index E = D_ - 1;
        switch (ch) {
            case 0:
                as_real(out.data(), D_).head(2 * S_) =
                    s * (wa2_ * as_real(psi.data() + Cb_, S_));
                break;
            case 1:
                as_real(out.data(), D_).tail(2 * S_) =
                    s * (wa2_ * as_real(psi.data(), S_));
                break;
            case 2:
                as_real(out.data(), D_).head(2 * E) =
                    s * (wb2_ * as_real(psi.data() + 1, E));
                break;
            case 3:
                as_real(out.data(), D_).tail(2 * E) =
                    s * (wb2_ * as_real(psi.data(), E));
                break;
            default: throw std::invalid_argument("apply_channel: channel must be 0..3");
        }
    }

private:
    using RealMap = Eigen::Map<Eigen::ArrayXd>;
    using ConstRealMap = Eigen::Map<const Eigen::ArrayXd>;
    static RealMap as_real(cplx* p, Eigen::Index n) {
        return RealMap(reinterpret_cast<double*>(p), 2 * n);
    }
    static ConstRealMap as_real(const cplx* p, Eigen::Index n) {
        return ConstRealMap(reinterpret_cast<const double*>(p), 2 * n);
    }

    DriveEnvelope drive_;
    double g_ = 0.0;
    double r_[4] = {0.0, 0.0, 0.0, 0.0};
    Eigen::Index Ca_ = 0, Cb_ = 0, D_ = 0, S_ = 0, S1_ = 0;
    Eigen::ArrayXd e_, damp_, wa_, wb_, wbda_;
    Eigen::ArrayXcd kdiag_, wa_c_, wbda_c_;
    Eigen::ArrayXd wa2_, wb2_, wbda2g_;  // duplicated for interleaved re/im data
};

// ---- steppers ----

namespace detail {

struct MasterStepper {
    const BandedGenerator& gen;
    Matrix k1, k2, k3, k4, tmp, scratch;

    explicit MasterStepper(const BandedGenerator& g) : gen(g) {
        const Eigen::Index D = g.dim();
        for (Matrix* m : {&k1, &k2, &k3, &k4, &tmp, &scratch}) m->resize(D, D);
    }
    void step(Matrix& rho, double t, double dt) {
        gen.master_rhs(rho, t, k1, scratch);
        tmp = rho + (0.5 * dt) * k1;
        gen.master_rhs(tmp, t + 0.5 * dt, k2, scratch);
        tmp = rho + (0.5 * dt) * k2;
        gen.master_rhs(tmp, t + 0.5 * dt, k3, scratch);
        tmp = rho + dt * k3;
        gen.master_rhs(tmp, t + dt, k4, scratch);
        rho += (dt / 6.0) * (k1 + k4) + (dt / 3.0) * (k2 + k3);
    }
};

struct StateStepper {
    const BandedGenerator& gen;
    bool with_damping;
    Vector k1, k2, k3, k4, tmp;

    StateStepper(const BandedGenerator& g, bool damped) : gen(g), with_damping(damped) {
        const Eigen::Index D = g.dim();
        for (Vector* v : {&k1, &k2, &k3, &k4, &tmp}) v->resize(D);
    }
    // i dpsi/dt = H psi  ->  dpsi/dt = -i H psi
    void step(Vector& psi, double t, double dt) {
        gen.apply_h(psi, t, k1, with_damping);
        tmp = psi - cplx(0.0, 0.5 * dt) * k1;
        gen.apply_h(tmp, t + 0.5 * dt, k2, with_damping);
        tmp = psi - cplx(0.0, 0.5 * dt) * k2;
        gen.apply_h(tmp, t + 0.5 * dt, k3, with_damping);
        tmp = psi - cplx(0.0, dt) * k3;
        gen.apply_h(tmp, t + dt, k4, with_damping);
        psi -= cplx(0.0, dt / 6.0) * (k1 + k4) + cplx(0.0, dt / 3.0) * (k2 + k3);
    }
};

inline bool is_sample_step(std::size_t k, std::size_t n_steps, std::size_t every) {
    return k % every == 0 || k == n_steps;
}

inline std::size_t count_samples(std::size_t n_steps, std::size_t every) {
    std::size_t c = n_steps / every + 1;
    if (n_steps % every != 0) ++c;
    return c;
}

}  // namespace detail

// ---- deterministic propagation ----

inline EvolutionRecord evolve_schrodinger(const Vector& psi0, const ModelParams& p,
                                          const CompositeSpace& space,
                                          const EvolutionConfig& cfg) {
    cfg.validate();
    p.validate();
    const Eigen::Index D = static_cast<Eigen::Index>(space.dim());
    if (psi0.size() != D)
        throw std::invalid_argument("evolve_schrodinger: state dimension mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-8)
        throw std::invalid_argument("evolve_schrodinger: psi0 must be normalized");

    BandedGenerator gen(p, space);
    detail::StateStepper stepper(gen, false);
    const std::size_t N = cfg.n_steps();

    EvolutionRecord rec;
    rec.space = space;
    Vector psi = psi0;
    for (std::size_t k = 0;; ++k) {
        const double t = double(k) * cfg.dt;
        if (detail::is_sample_step(k, N, cfg.sample_every)) {
            const double nrm = psi.norm();
            const double err = std::abs(nrm - 1.0);
            if (err > 1e-6 * std::max(t, 10.0 * cfg.dt))
                throw std::runtime_error(
                    "evolve_schrodinger: norm drift exceeds 1e-6 per unit time; reduce dt");
            Vector psin = psi / nrm;
            rec.times.push_back(t);
            rec.rho_a.push_back(reduced_of_state(psin, Mode::photon, space));
            rec.rho_b.push_back(reduced_of_state(psin, Mode::exciton, space));
            rec.trace_err.push_back(err);
            rec.herm_err.push_back(0.0);
            rec.min_eig.push_back(0.0);  // projector onto psi
        }
        if (k == N) break;
        stepper.step(psi, t, cfg.dt);
    }
    return rec;
}

inline EvolutionRecord evolve_master(const Matrix& rho0, const ModelParams& p,
                                     const CompositeSpace& space,
                                     const EvolutionConfig& cfg) {
    cfg.validate();
    p.validate();
    const Eigen::Index D = static_cast<Eigen::Index>(space.dim());
    if (rho0.rows() != D || rho0.cols() != D)
        throw std::invalid_argument("evolve_master: rho0 dimension mismatch");
    if (!check_density(rho0).ok())
        throw std::invalid_argument("evolve_master: rho0 is not a valid density matrix");

    BandedGenerator gen(p, space);
    detail::MasterStepper stepper(gen);
    const std::size_t N = cfg.n_steps();
    // full-state positivity is cubic in D; check every sample only when cheap
    const std::size_t pos_stride = (D <= 144) ? 1 : 50;

    EvolutionRecord rec;
    rec.space = space;
    Matrix rho = rho0;
    std::size_t n_sampled = 0;
    for (std::size_t k = 0;; ++k) {
        const double t = double(k) * cfg.dt;
        if (detail::is_sample_step(k, N, cfg.sample_every)) {
            const double tr_err = std::abs(rho.trace() - cplx(1.0, 0.0));
            if (tr_err > 1e-4)
                throw std::runtime_error(
                    "evolve_master: trace drift exceeds 1e-4; reduce dt or raise cutoffs");
            const double h_err = (rho - rho.adjoint().eval()).cwiseAbs().maxCoeff();
            rho = (0.5 * (rho + rho.adjoint())).eval();
            rec.times.push_back(t);
            rec.rho_a.push_back(partial_trace(rho, Mode::photon, space));
            rec.rho_b.push_back(partial_trace(rho, Mode::exciton, space));
            rec.trace_err.push_back(tr_err);
            rec.herm_err.push_back(h_err);
            rec.min_eig.push_back(n_sampled % pos_stride == 0
                                      ? min_eigenvalue(rho)
                                      : std::numeric_limits<double>::quiet_NaN());
            ++n_sampled;
        }
        if (k == N) break;
        stepper.step(rho, t, cfg.dt);
    }
    return rec;
}

// ---- stochastic trajectories ----

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

// mt19937_64 is fully specified by the standard; the std distributions are
// not, so uniforms and normals are derived manually for reproducibility.
struct Rng {
    std::mt19937_64 gen;
    double cached = 0.0;
    bool have_cached = false;

    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform() { return double(gen() >> 11) * 0x1.0p-53; }  // [0, 1)
    double normal() {
        if (have_cached) {
            have_cached = false;
            return cached;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        cached = r * std::sin(2.0 * pi * u2);
        have_cached = true;
        return r * std::cos(2.0 * pi * u2);
    }
};

// per-chunk partial sums, merged in fixed chunk order
struct TrajAccum {
    std::vector<Matrix> ra, rb;
    Eigen::ArrayXd sn, sn2, snb, snb2;

    TrajAccum() = default;
    TrajAccum(std::size_t n_samples, Eigen::Index da, Eigen::Index db) {
        ra.assign(n_samples, Matrix::Zero(da, da));
        rb.assign(n_samples, Matrix::Zero(db, db));
        const auto n = static_cast<Eigen::Index>(n_samples);
        sn = Eigen::ArrayXd::Zero(n);
        sn2 = Eigen::ArrayXd::Zero(n);
        snb = Eigen::ArrayXd::Zero(n);
        snb2 = Eigen::ArrayXd::Zero(n);
    }
    void add(const TrajAccum& o) {
        for (std::size_t s = 0; s < ra.size(); ++s) {
            ra[s] += o.ra[s];
            rb[s] += o.rb[s];
        }
        sn += o.sn;
        sn2 += o.sn2;
        snb += o.snb;
        snb2 += o.snb2;
    }
};

constexpr std::size_t kTrajChunk = 16;

}  // namespace detail

inline EvolutionRecord run_trajectories(const Vector& psi0, const ModelParams& p,
                                        const CompositeSpace& space,
                                        const EvolutionConfig& cfg,
                                        const TrajectoryConfig& tcfg) {
    cfg.validate();
    p.validate();
    tcfg.validate();
    const Eigen::Index D = static_cast<Eigen::Index>(space.dim());
    if (psi0.size() != D)
        throw std::invalid_argument("run_trajectories: state dimension mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-8)
        throw std::invalid_argument("run_trajectories: psi0 must be normalized");

    const BandedGenerator gen(p, space);
    const std::size_t N = cfg.n_steps();
    const std::size_t n_samples = detail::count_samples(N, cfg.sample_every);
    const Eigen::Index Da = static_cast<Eigen::Index>(space.photon.cutoff);
    const Eigen::Index Db = static_cast<Eigen::Index>(space.exciton.cutoff);
    const bool deterministic = p.gamma_a == 0.0 && p.gamma_b == 0.0;

    // one stochastic trajectory, accumulated into acc at each sample
    auto simulate = [&](std::size_t index, detail::TrajAccum& acc) {
        detail::Rng rng(detail::trajectory_seed(tcfg.master_seed, index));
        detail::StateStepper stepper(gen, !deterministic);
        Vector psi = psi0;
        Vector li(D), drift(D), noise(D);
        double r_thresh = deterministic ? -1.0 : rng.uniform();
        const bool qsd = tcfg.unraveling == Unraveling::diffusion && !deterministic;
        std::size_t s = 0;
        for (std::size_t k = 0;; ++k) {
            const double t = double(k) * cfg.dt;
            if (detail::is_sample_step(k, N, cfg.sample_every)) {
                const double nrm = psi.norm();
                Vector psin = psi / nrm;
                acc.ra[s] += reduced_of_state(psin, Mode::photon, space);
                acc.rb[s] += reduced_of_state(psin, Mode::exciton, space);
                const double na = occupation(psin, Mode::photon, space);
                const double nb = occupation(psin, Mode::exciton, space);
                acc.sn(static_cast<Eigen::Index>(s)) += na;
                acc.sn2(static_cast<Eigen::Index>(s)) += na * na;
                acc.snb(static_cast<Eigen::Index>(s)) += nb;
                acc.snb2(static_cast<Eigen::Index>(s)) += nb * nb;
                ++s;
            }
            if (k == N) break;
            if (qsd) {
                // Euler-Maruyama step of quantum state diffusion, psi kept normalized
                gen.apply_h(psi, t, drift, true);
                drift *= cplx(0.0, -1.0);
                noise.setZero();
                for (int ch = 0; ch < 4; ++ch) {
                    if (gen.rate(ch) <= 0.0) continue;
                    gen.apply_channel(ch, psi, li);
                    const cplx m = psi.dot(li);  // <L_ch>
                    drift += std::conj(m) * li - cplx(0.5 * std::norm(m), 0.0) * psi;
                    const double sq = std::sqrt(0.5 * cfg.dt);
                    const cplx dxi(sq * rng.normal(), sq * rng.normal());
                    noise += dxi * (li - m * psi);
                }
                psi += cfg.dt * drift + noise;
                psi /= psi.norm();
            } else {
                stepper.step(psi, t, cfg.dt);
                if (!deterministic && psi.squaredNorm() <= r_thresh) {
                    // jump: channel chosen proportional to <L†L>
                    double w[4], total = 0.0;
                    for (int ch = 0; ch < 4; ++ch) {
                        if (gen.rate(ch) > 0.0) {
                            gen.apply_channel(ch, psi, li);
                            w[ch] = li.squaredNorm();
                        } else {
                            w[ch] = 0.0;
                        }
                        total += w[ch];
                    }
                    double u = rng.uniform() * total;
                    int pick = 0;
                    for (; pick < 3; ++pick) {
                        if (u < w[pick]) break;
                        u -= w[pick];
                    }
                    gen.apply_channel(pick, psi, li);
                    psi = li / li.norm();
                    r_thresh = rng.uniform();
                }
            }
        }
    };

    auto run_chunk = [&](std::size_t c, detail::TrajAccum& acc) {
        const std::size_t lo = c * detail::kTrajChunk;
        const std::size_t hi = std::min(lo + detail::kTrajChunk, tcfg.n_traj);
        for (std::size_t j = lo; j < hi; ++j) simulate(j, acc);
    };

    const std::size_t n_chunks =
        (tcfg.n_traj + detail::kTrajChunk - 1) / detail::kTrajChunk;
    detail::TrajAccum total(n_samples, Da, Db);

    if (tcfg.n_workers <= 1 || n_chunks == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            detail::TrajAccum chunk(n_samples, Da, Db);
            run_chunk(c, chunk);
            total.add(chunk);
        }
    } else {
        // workers publish per-chunk sums; the reducer folds them in chunk order,
        // so the result cannot depend on scheduling
        std::atomic<std::size_t> next{0};
        std::mutex mx;
        std::condition_variable cv;
        std::map<std::size_t, detail::TrajAccum> done;
        const std::size_t nw = std::min(tcfg.n_workers, n_chunks);
        std::vector<std::thread> workers;
        workers.reserve(nw);
        for (std::size_t w = 0; w < nw; ++w)
            workers.emplace_back([&] {
                for (;;) {
                    const std::size_t c = next.fetch_add(1);
                    if (c >= n_chunks) return;
                    detail::TrajAccum acc(n_samples, Da, Db);
                    run_chunk(c, acc);
                    std::lock_guard<std::mutex> lk(mx);
                    done.emplace(c, std::move(acc));
                    cv.notify_all();
                }
            });
        for (std::size_t c = 0; c < n_chunks; ++c) {
            std::unique_lock<std::mutex> lk(mx);
            cv.wait(lk, [&] { return done.count(c) > 0; });
            detail::TrajAccum acc = std::move(done.at(c));
            done.erase(c);
            lk.unlock();
            total.add(acc);
        }
        for (auto& th : workers) th.join();
    }

    EvolutionRecord rec;
    rec.space = space;
    rec.n_traj = tcfg.n_traj;
    const double n = static_cast<double>(tcfg.n_traj);
    rec.times.reserve(n_samples);
    for (std::size_t k = 0, s = 0; s < n_samples; ++k) {
        if (!detail::is_sample_step(k, N, cfg.sample_every)) continue;
        rec.times.push_back(double(k) * cfg.dt);
        Matrix ra = total.ra[s] / n;
        Matrix rb = total.rb[s] / n;
        rec.trace_err.push_back(std::abs(ra.trace() - cplx(1.0, 0.0)));
        rec.herm_err.push_back((ra - ra.adjoint().eval()).cwiseAbs().maxCoeff());
        rec.min_eig.push_back(std::numeric_limits<double>::quiet_NaN());
        rec.rho_a.push_back(std::move(ra));
        rec.rho_b.push_back(std::move(rb));
        const auto si = static_cast<Eigen::Index>(s);
        auto std_err = [&](double sum, double sumsq) {
            if (tcfg.n_traj < 2) return 0.0;
            const double mean = sum / n;
            const double var = (sumsq - n * mean * mean) / (n - 1.0);
            return std::sqrt(std::max(0.0, var) / n);
        };
        rec.se_n_a.push_back(std_err(total.sn(si), total.sn2(si)));
        rec.se_n_b.push_back(std_err(total.snb(si), total.snb2(si)));
        ++s;
    }
    return rec;
}

// ---- modulation window ----

struct PeriodicWindow {
    double t_max = 0.0;
    double t_min = 0.0;
    std::size_t idx_max = 0;
    std::size_t idx_min = 0;
    bool degenerate = false;
};

// sample times of the extrema of <n_a> within the last complete modulation
// period after the transient cut
inline PeriodicWindow find_periodic_window(const EvolutionRecord& rec,
                                           const ModelParams& p,
                                           double transient_cut = 10.0) {
    if (p.delta_mod == 0.0)
        throw std::invalid_argument("find_periodic_window: delta_mod must be nonzero");
    if (rec.size() < 2)
        throw std::invalid_argument("find_periodic_window: record too short");
    const double T = 2.0 * pi / std::abs(p.delta_mod);
    const double t_hi = rec.times.back();
    const double t_lo = t_hi - T;
    if (t_lo < transient_cut - 1e-9)
        throw std::invalid_argument(
            "find_periodic_window: record must cover the transient cut plus one period");

    PeriodicWindow w;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t s = 0; s < rec.size(); ++s) {
        if (rec.times[s] < t_lo - 1e-9) continue;
        const double na = diag_mean_number(rec.rho_a[s]);
        if (na > hi) {
            hi = na;
            w.idx_max = s;
        }
        if (na < lo) {
            lo = na;
            w.idx_min = s;
        }
    }
    w.t_max = rec.times[w.idx_max];
    w.t_min = rec.times[w.idx_min];
    w.degenerate = (hi - lo) < 1e-6;
    return w;
}

}  // namespace kerrcav
