// phasespace.hpp — single-mode Wigner function via displaced parity and the
// negativity report.
//
// W(alpha) = (2/pi) tr[rho D(alpha) P D(alpha)†].  The state is zero-padded
// well past its own cutoff before displacing, otherwise the truncated
// displacement aliases distant grid points back into the corner of the basis.
// Two symmetries keep the cost low: D(r(a†-a)) is similar to exp(-i r(a+a†))
// under diag(i^n), and (a+a†) is diagonalized once since its eigenvalues just
// scale with r; off-axis points follow by rotation covariance with number
// phases, so each distinct grid radius costs one small matrix sandwich.

#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hilbert.hpp"

namespace kerrcav {

// ---- grid types ----

struct WignerSpec {
    std::size_t n_x = 101;
    std::size_t n_p = 101;
    double radius = 4.0;

    void validate() const {
        if (n_x < 2 || n_p < 2)
            throw std::invalid_argument("WignerSpec: grid needs at least 2 points per axis");
        if (!(radius > 0.0))
            throw std::invalid_argument("WignerSpec: radius must be > 0");
    }
};

struct WignerGrid {
    std::vector<double> re_alpha;  // axis, length n_x
    std::vector<double> im_alpha;  // axis, length n_p
    Eigen::MatrixXd values;        // values(i, j) = W(re_alpha[i] + i*im_alpha[j])
    std::string convention = "alpha-normalized";  // integral over d^2 alpha = 1
    bool truncation_warning = false;
    double top_population = 0.0;
};

struct NegativityReport {
    double min_value = 0.0;
    double min_re = 0.0;
    double min_im = 0.0;
    double negative_volume = 0.0;  // integral of |W| over the W < 0 region
};

namespace detail {

// symmetric axis: mirrored entries are exact sign flips, so grid radii collide
// bitwise and the per-radius work is shared across the eightfold symmetry
inline std::vector<double> symmetric_axis(std::size_t n, double radius) {
    std::vector<double> x(n);
    const double h = 2.0 * radius / static_cast<double>(n - 1);
    for (std::size_t i = 0; 2 * i < n; ++i) {
        const double v = -radius + static_cast<double>(i) * h;
        x[i] = v;
        x[n - 1 - i] = -v;
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
    return x;
}

// padded dimension needed so the displaced state stays inside the basis
inline Eigen::Index wigner_pad(Eigen::Index cutoff, double radius, double n_mean) {
    const double reach = std::sqrt(2.0) * radius + std::sqrt(std::max(0.0, n_mean)) + 3.0;
    const double need = std::ceil(reach * reach);
    Eigen::Index pad = std::max<Eigen::Index>(80, static_cast<Eigen::Index>(need));
    return std::max(pad, cutoff);
}

}  // namespace detail

// ---- evaluation ----

inline WignerGrid wigner(const Matrix& rho_mode, const WignerSpec& spec = {}) {
    spec.validate();
    const Eigen::Index Ca = rho_mode.rows();
    if (Ca < 1 || rho_mode.cols() != Ca)
        throw std::invalid_argument("wigner: rho must be a square single-mode matrix");

    double n_mean = 0.0;
    for (Eigen::Index k = 0; k < Ca; ++k) n_mean += double(k) * rho_mode(k, k).real();
    const Eigen::Index P = detail::wigner_pad(Ca, spec.radius, n_mean);

    WignerGrid grid;
    grid.re_alpha = detail::symmetric_axis(spec.n_x, spec.radius);
    grid.im_alpha = detail::symmetric_axis(spec.n_p, spec.radius);
    grid.values.resize(static_cast<Eigen::Index>(spec.n_x),
                       static_cast<Eigen::Index>(spec.n_p));
    grid.top_population = rho_mode(Ca - 1, Ca - 1).real();
    grid.truncation_warning = grid.top_population > 1e-4;

    // quadrature operator a + a† in the padded basis: one eigensolve serves
    // every radius because eig(r(a+a†)) = r * eig(a+a†)
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(P, P);
    for (Eigen::Index n = 0; n + 1 < P; ++n)
        X(n, n + 1) = X(n + 1, n) = std::sqrt(double(n + 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("wigner: quadrature eigensolve failed");
    const Eigen::MatrixXd& V = es.eigenvectors();
    const Eigen::VectorXd& lam = es.eigenvalues();

    // G = V^T (-1)^n V, the parity in the quadrature eigenbasis
    Eigen::MatrixXd G(P, P);
    {
        Eigen::MatrixXd PV = V;
        for (Eigen::Index n = 1; n < P; n += 2) PV.row(n) = -V.row(n);
        G.noalias() = V.transpose() * PV;
    }
    const Eigen::MatrixXd Vtop = V.topRows(Ca);
    const Eigen::MatrixXcd Gc = G.cast<cplx>();

    // group grid points by |alpha|; mirrored axis values collide exactly
    std::map<double, std::vector<std::pair<std::size_t, std::size_t>>> by_radius;
    for (std::size_t i = 0; i < spec.n_x; ++i)
        for (std::size_t j = 0; j < spec.n_p; ++j) {
            const double ax = std::abs(grid.re_alpha[i]);
            const double ay = std::abs(grid.im_alpha[j]);
            by_radius[std::hypot(std::min(ax, ay), std::max(ax, ay))].emplace_back(i, j);
        }

    Eigen::MatrixXcd T(Ca, P), M0(Ca, Ca), Y(Ca, Ca);
    Eigen::VectorXcd u(Ca);
    const cplx ipow[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    for (const auto& [r, points] : by_radius) {
        // M = D(r) P D(r)† restricted to the occupied corner, via
        // D(r) = S V diag(e^{-i r lam}) V^T S†, S = diag(i^n)
        for (Eigen::Index j = 0; j < P; ++j)
            T.col(j) = Vtop.col(j) * std::exp(cplx(0.0, -r * lam(j)));
        M0.noalias() = (T * Gc) * T.adjoint();
        for (Eigen::Index l = 0; l < Ca; ++l)
            for (Eigen::Index j = 0; j < Ca; ++j)
                M0(l, j) *= ipow[((l - j) % 4 + 4) % 4];
        // W(r e^{i theta}) = (2/pi) u† Y u with u_k = e^{i theta k}
        Y = rho_mode.cwiseProduct(M0.transpose());
        for (const auto& [i, j] : points) {
            const double theta = std::atan2(grid.im_alpha[j], grid.re_alpha[i]);
            for (Eigen::Index k = 0; k < Ca; ++k)
                u(k) = std::exp(cplx(0.0, theta * double(k)));
            const cplx w = (u.adjoint() * Y * u).value();
            grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                (2.0 / pi) * w.real();
        }
    }
    return grid;
}

// ---- negativity ----

inline NegativityReport negativity(const WignerGrid& grid) {
    if (grid.re_alpha.size() < 2 || grid.im_alpha.size() < 2)
        throw std::invalid_argument("negativity: grid too small");
    NegativityReport rep;
    rep.min_value = std::numeric_limits<double>::infinity();
    const double hx = grid.re_alpha[1] - grid.re_alpha[0];
    const double hy = grid.im_alpha[1] - grid.im_alpha[0];
    for (Eigen::Index i = 0; i < grid.values.rows(); ++i)
        for (Eigen::Index j = 0; j < grid.values.cols(); ++j) {
            const double w = grid.values(i, j);
            if (w < rep.min_value) {
                rep.min_value = w;
                rep.min_re = grid.re_alpha[static_cast<std::size_t>(i)];
                rep.min_im = grid.im_alpha[static_cast<std::size_t>(j)];
            }
            if (w < 0.0) rep.negative_volume += -w * hx * hy;
        }
    return rep;
}

}  // namespace kerrcav
