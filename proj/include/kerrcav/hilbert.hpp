// hilbert.hpp — truncated Fock spaces: mode operators, tensor embedding, states,
// partial traces and density-matrix validity checks.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>

namespace kerrcav {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

// --------------------------- Spaces -----------------------------------------

// One bosonic mode truncated to Fock states |0>..|cutoff-1>.
struct ModeSpace {
    std::size_t cutoff;

    explicit ModeSpace(std::size_t c) : cutoff(c) {
        if (c < 2) throw std::invalid_argument("ModeSpace: cutoff must be >= 2");
    }
};

enum class Mode { photon, exciton };

// Tensor product of the photon and exciton spaces.
// Basis ordering is photon-index major: index k = n_a * exciton.cutoff + n_b.
struct CompositeSpace {
    ModeSpace photon;
    ModeSpace exciton;

    CompositeSpace(ModeSpace ph, ModeSpace ex) : photon(ph), exciton(ex) {}

    std::size_t dim() const { return photon.cutoff * exciton.cutoff; }

    std::size_t index(std::size_t n_a, std::size_t n_b) const {
        if (n_a >= photon.cutoff || n_b >= exciton.cutoff)
            throw std::out_of_range("CompositeSpace::index: occupation out of range");
        return n_a * exciton.cutoff + n_b;
    }

    std::size_t photon_of(std::size_t k) const { return k / exciton.cutoff; }
    std::size_t exciton_of(std::size_t k) const { return k % exciton.cutoff; }

    const ModeSpace& mode(Mode m) const { return m == Mode::photon ? photon : exciton; }
};

// --------------------------- Mode operators ---------------------------------

// a|n> = sqrt(n)|n-1>; the adjoint clips at the top level by construction.
inline Matrix annihilation(const ModeSpace& space) {
    const auto N = static_cast<Eigen::Index>(space.cutoff);
    Matrix M = Matrix::Zero(N, N);
    for (Eigen::Index n = 1; n < N; ++n)
        M(n - 1, n) = std::sqrt(static_cast<double>(n));
    return M;
}

inline Matrix creation(const ModeSpace& space) {
    return annihilation(space).adjoint();
}

inline Matrix number_operator(const ModeSpace& space) {
    const auto N = static_cast<Eigen::Index>(space.cutoff);
    Matrix M = Matrix::Zero(N, N);
    for (Eigen::Index n = 0; n < N; ++n) M(n, n) = static_cast<double>(n);
    return M;
}

inline Matrix identity(std::size_t n) {
    return Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
}

// Lift a single-mode operator to the composite space (A ⊗ I or I ⊗ B).
inline Matrix embed(const Matrix& op, Mode which, const CompositeSpace& space) {
    const std::size_t n = space.mode(which).cutoff;
    if (op.rows() != static_cast<Eigen::Index>(n) || op.cols() != static_cast<Eigen::Index>(n))
        throw std::invalid_argument("embed: operator dimension does not match the selected mode");
    const std::size_t ca = space.photon.cutoff, cb = space.exciton.cutoff;
    Matrix M = Matrix::Zero(static_cast<Eigen::Index>(ca * cb), static_cast<Eigen::Index>(ca * cb));
    if (which == Mode::photon) {
        for (std::size_t i = 0; i < ca; ++i)
            for (std::size_t j = 0; j < ca; ++j) {
                const cplx v = op(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (v == cplx(0.0, 0.0)) continue;
                for (std::size_t b = 0; b < cb; ++b)
                    M(static_cast<Eigen::Index>(i * cb + b), static_cast<Eigen::Index>(j * cb + b)) = v;
            }
    } else {
        for (std::size_t a = 0; a < ca; ++a)
            for (std::size_t i = 0; i < cb; ++i)
                for (std::size_t j = 0; j < cb; ++j)
                    M(static_cast<Eigen::Index>(a * cb + i), static_cast<Eigen::Index>(a * cb + j)) =
                        op(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    return M;
}

// --------------------------- States -----------------------------------------

inline Vector fock_single(const ModeSpace& space, std::size_t n) {
    if (n >= space.cutoff) throw std::out_of_range("fock_single: n exceeds cutoff");
    Vector v = Vector::Zero(static_cast<Eigen::Index>(space.cutoff));
    v(static_cast<Eigen::Index>(n)) = 1.0;
    return v;
}

inline Vector fock(const CompositeSpace& space, std::size_t n_a, std::size_t n_b) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(space.dim()));
    v(static_cast<Eigen::Index>(space.index(n_a, n_b))) = 1.0;
    return v;
}

inline Vector vacuum(const CompositeSpace& space) { return fock(space, 0, 0); }

// Truncated coherent state, renormalized on the truncated space.
inline Vector coherent_single(const ModeSpace& space, cplx alpha) {
    const auto N = static_cast<Eigen::Index>(space.cutoff);
    Vector v(N);
    cplx amp = 1.0;
    v(0) = amp;
    for (Eigen::Index n = 1; n < N; ++n) {
        amp *= alpha / std::sqrt(static_cast<double>(n));
        v(n) = amp;
    }
    v /= v.norm();
    return v;
}

// Thermal state with mean occupation nbar, geometric weights renormalized
// over the truncation.
inline Matrix thermal_single(const ModeSpace& space, double nbar) {
    if (nbar < 0.0) throw std::invalid_argument("thermal_single: nbar must be >= 0");
    const auto N = static_cast<Eigen::Index>(space.cutoff);
    Matrix rho = Matrix::Zero(N, N);
    if (nbar == 0.0) { rho(0, 0) = 1.0; return rho; }
    const double q = nbar / (1.0 + nbar);
    double w = 1.0, sum = 0.0;
    for (Eigen::Index n = 0; n < N; ++n) { rho(n, n) = w; sum += w; w *= q; }
    rho /= sum;
    return rho;
}

inline Matrix density_from(const Vector& psi) { return psi * psi.adjoint(); }

// --------------------------- Partial trace ----------------------------------

// Reduced density matrix of the kept mode, Tr over the other mode.
inline Matrix partial_trace(const Matrix& rho, Mode keep, const CompositeSpace& space) {
    const auto D = static_cast<Eigen::Index>(space.dim());
    if (rho.rows() != D || rho.cols() != D)
        throw std::invalid_argument("partial_trace: rho dimension does not match the space");
    const auto ca = static_cast<Eigen::Index>(space.photon.cutoff);
    const auto cb = static_cast<Eigen::Index>(space.exciton.cutoff);
    if (keep == Mode::photon) {
        Matrix out = Matrix::Zero(ca, ca);
        for (Eigen::Index i = 0; i < ca; ++i)
            for (Eigen::Index j = 0; j < ca; ++j) {
                cplx s = 0.0;
                for (Eigen::Index b = 0; b < cb; ++b) s += rho(i * cb + b, j * cb + b);
                out(i, j) = s;
            }
        return out;
    }
    Matrix out = Matrix::Zero(cb, cb);
    for (Eigen::Index i = 0; i < cb; ++i)
        for (Eigen::Index j = 0; j < cb; ++j) {
            cplx s = 0.0;
            for (Eigen::Index a = 0; a < ca; ++a) s += rho(a * cb + i, a * cb + j);
            out(i, j) = s;
        }
    return out;
}

// Reduced density matrices of a pure composite state without forming |psi><psi|.
inline Matrix reduced_of_state(const Vector& psi, Mode keep, const CompositeSpace& space) {
    const auto ca = static_cast<Eigen::Index>(space.photon.cutoff);
    const auto cb = static_cast<Eigen::Index>(space.exciton.cutoff);
    if (psi.size() != ca * cb)
        throw std::invalid_argument("reduced_of_state: state dimension does not match the space");
    // psi[a*cb + b] viewed column-major as P(b, a)
    Eigen::Map<const Matrix> P(psi.data(), cb, ca);
    if (keep == Mode::photon) {
        Matrix out(ca, ca);
        out.noalias() = (P.adjoint() * P).conjugate();
        return out;
    }
    Matrix out(cb, cb);
    out.noalias() = P * P.adjoint();
    return out;
}

// --------------------------- Expectations -----------------------------------

inline cplx expectation(const Matrix& op, const Matrix& rho) {
    if (op.rows() != rho.rows() || op.cols() != rho.cols())
        throw std::invalid_argument("expectation: dimension mismatch");
    cplx s = 0.0;
    for (Eigen::Index j = 0; j < op.cols(); ++j) s += (op.row(j) * rho.col(j)).value();
    return s;  // Tr(op*rho)
}

inline cplx expectation_state(const Matrix& op, const Vector& psi) {
    if (op.rows() != psi.size())
        throw std::invalid_argument("expectation_state: dimension mismatch");
    return psi.dot(op * psi);
}

// Mean occupation of one mode of a composite pure state (diagonal weights only).
inline double occupation(const Vector& psi, Mode which, const CompositeSpace& space) {
    const auto D = static_cast<Eigen::Index>(space.dim());
    if (psi.size() != D) throw std::invalid_argument("occupation: dimension mismatch");
    double s = 0.0;
    for (Eigen::Index k = 0; k < D; ++k) {
        const std::size_t n = which == Mode::photon ? space.photon_of(static_cast<std::size_t>(k))
                                                    : space.exciton_of(static_cast<std::size_t>(k));
        s += static_cast<double>(n) * std::norm(psi(k));
    }
    return s;
}

// --------------------------- Validity checks --------------------------------

inline bool is_hermitian(const Matrix& A, double tol = 1e-12) {
    return (A - A.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline double min_eigenvalue(const Matrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (hermitian + hermitian.adjoint()),
                                             Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("min_eigenvalue: eigensolve failed");
    return es.eigenvalues().minCoeff();
}

// Deviations of rho from a valid state: trace 1, hermitian, positive.
struct DensityCheck {
    double trace_err;   // |Tr rho - 1|
    double herm_err;    // max |rho - rho†|
    double min_eig;     // smallest eigenvalue of the hermitian part

    bool ok(double trace_tol = 1e-6, double herm_tol = 1e-8, double eig_floor = -1e-6) const {
        return trace_err <= trace_tol && herm_err <= herm_tol && min_eig >= eig_floor;
    }
};

inline DensityCheck check_density(const Matrix& rho) {
    DensityCheck c;
    c.trace_err = std::abs(rho.trace() - cplx(1.0, 0.0));
    c.herm_err = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    c.min_eig = min_eigenvalue(rho);
    return c;
}

}  // namespace kerrcav
