// model.hpp — Hamiltonian, Lindblad channels and the drive envelope for the
// Kerr exciton-photon cavity.  All rates and energies are in units of gamma.

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "hilbert.hpp"

namespace kerrcav {

// ---- parameters ----

struct ModelParams {
    double delta_ph = 0.0;   // photon detuning
    double delta_ex = 0.0;   // exciton detuning
    double chi = 0.0;        // Kerr constant
    double g = 0.0;          // photon-exciton coupling
    double omega1 = 0.0;     // cw drive amplitude
    double omega2 = 0.0;     // modulated drive amplitude
    double delta_mod = 0.0;  // modulation frequency
    double gamma_a = 1.0;    // photon decay rate
    double gamma_b = 1.0;    // exciton decay rate
    double n_th = 0.0;       // thermal quanta of the bath

    void validate() const {
        auto fin = [](double x) { return std::isfinite(x); };
        if (!(fin(delta_ph) && fin(delta_ex) && fin(chi) && fin(g) && fin(omega1) &&
              fin(omega2) && fin(delta_mod) && fin(gamma_a) && fin(gamma_b) && fin(n_th)))
            throw std::invalid_argument("ModelParams: all parameters must be finite");
        if (gamma_a < 0.0 || gamma_b < 0.0)
            throw std::invalid_argument("ModelParams: decay rates must be >= 0");
        if (n_th < 0.0) throw std::invalid_argument("ModelParams: n_th must be >= 0");
    }
};

// ---- drive envelope ----

// Omega(t) = Omega1 + Omega2 exp(-i delta t)
struct DriveEnvelope {
    double omega1 = 0.0;
    double omega2 = 0.0;
    double delta_mod = 0.0;

    cplx at(double t) const {
        return cplx(omega1, 0.0) +
               omega2 * std::exp(cplx(0.0, -delta_mod * t));
    }
};

inline DriveEnvelope drive_of(const ModelParams& p) {
    return DriveEnvelope{p.omega1, p.omega2, p.delta_mod};
}

// ---- operators ----

// H(t) = d_ph a†a + d_ex b†b + chi b†²b² + g(b a† + b† a) + W(t) a + W*(t) a†
inline Matrix hamiltonian_at(const ModelParams& p, const CompositeSpace& space, double t) {
    p.validate();
    const Matrix a = embed(annihilation(space.photon), Mode::photon, space);
    const Matrix b = embed(annihilation(space.exciton), Mode::exciton, space);
    const Matrix ad = a.adjoint();
    const Matrix bd = b.adjoint();
    const cplx W = drive_of(p).at(t);

    Matrix H = p.delta_ph * (ad * a) + p.delta_ex * (bd * b) +
               p.chi * (bd * bd * b * b) + p.g * (b * ad + bd * a) +
               W * a + std::conj(W) * ad;
    return H;
}

// L1 = sqrt((n_th+1) ga) a,  L2 = sqrt(n_th ga) a†,
// L3 = sqrt((n_th+1) gb) b,  L4 = sqrt(n_th gb) b†
inline std::array<Matrix, 4> lindblad_operators(const ModelParams& p,
                                                const CompositeSpace& space) {
    p.validate();
    const Matrix a = embed(annihilation(space.photon), Mode::photon, space);
    const Matrix b = embed(annihilation(space.exciton), Mode::exciton, space);
    return {std::sqrt((p.n_th + 1.0) * p.gamma_a) * a,
            std::sqrt(p.n_th * p.gamma_a) * Matrix(a.adjoint()),
            std::sqrt((p.n_th + 1.0) * p.gamma_b) * b,
            std::sqrt(p.n_th * p.gamma_b) * Matrix(b.adjoint())};
}

// non-hermitian drift for trajectory propagation
inline Matrix effective_hamiltonian(const ModelParams& p, const CompositeSpace& space,
                                    double t) {
    Matrix H = hamiltonian_at(p, space, t);
    for (const Matrix& L : lindblad_operators(p, space))
        H -= cplx(0.0, 0.5) * (L.adjoint() * L);
    return H;
}

// ---- detuning heuristic ----

// two-photon resonance of the lower Rabi doublet, neglecting the Kerr shift
inline double resonant_detuning_estimate(double g) {
    if (g < 0.0)
        throw std::invalid_argument("resonant_detuning_estimate: g must be >= 0");
    return g;
}

}  // namespace kerrcav
