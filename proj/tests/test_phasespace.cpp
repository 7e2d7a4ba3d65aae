// Wigner evaluation against closed-form states and structural invariants.

#include <catch2/catch_amalgamated.hpp>

#include <kerrcav/phasespace.hpp>

#include <random>

using namespace kerrcav;

namespace {

Matrix random_density(Eigen::Index n, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = cplx(u(gen), u(gen));
    Matrix rho = A * A.adjoint();
    rho /= rho.trace();
    return rho;
}

double grid_integral(const WignerGrid& g) {
    const double hx = g.re_alpha[1] - g.re_alpha[0];
    const double hy = g.im_alpha[1] - g.im_alpha[0];
    return g.values.sum() * hx * hy;
}

WignerSpec small_spec() {
    WignerSpec s;
    s.n_x = s.n_p = 41;
    s.radius = 4.0;
    return s;
}

}  // namespace

TEST_CASE("vacuum wigner function") {
    ModeSpace m(4);
    auto g = wigner(density_from(fock_single(m, 0)), small_spec());
    const std::size_t c = 20;  // axis midpoint, exactly alpha = 0
    CHECK(g.re_alpha[c] == 0.0);
    CHECK(std::abs(g.values(c, c) - 2.0 / pi) < 1e-10);
    CHECK(g.values.minCoeff() > -1e-10);
    CHECK(std::abs(grid_integral(g) - 1.0) < 1e-2);
    CHECK_FALSE(g.truncation_warning);

    auto rep = negativity(g);
    CHECK(rep.min_value >= -1e-10);
    CHECK(rep.negative_volume < 1e-9);  // fp noise of the far tail
}

TEST_CASE("coherent state wigner is a displaced gaussian") {
    ModeSpace m(30);
    const cplx beta(0.8, 0.5);
    auto g = wigner(density_from(coherent_single(m, beta)), small_spec());
    for (std::size_t i = 0; i < 41; i += 4)
        for (std::size_t j = 0; j < 41; j += 4) {
            const cplx alpha(g.re_alpha[i], g.im_alpha[j]);
            const double want = (2.0 / pi) * std::exp(-2.0 * std::norm(alpha - beta));
            CHECK(std::abs(g.values(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(j)) -
                           want) < 1e-6);
        }
    CHECK(std::abs(grid_integral(g) - 1.0) < 1e-2);
}

TEST_CASE("fock state wigner matches the laguerre formula") {
    ModeSpace m(12);
    SECTION("one photon") {
        auto g = wigner(density_from(fock_single(m, 1)), small_spec());
        CHECK(std::abs(g.values(20, 20) + 2.0 / pi) < 1e-10);
        for (std::size_t i = 0; i < 41; i += 3) {
            const double r2 = g.re_alpha[i] * g.re_alpha[i];
            const double want = (2.0 / pi) * (4.0 * r2 - 1.0) * std::exp(-2.0 * r2);
            CHECK(std::abs(g.values(static_cast<Eigen::Index>(i), 20) - want) < 1e-8);
        }
        auto rep = negativity(g);
        CHECK(std::abs(rep.min_value + 2.0 / pi) < 1e-10);
        CHECK(rep.min_re == 0.0);
        CHECK(rep.min_im == 0.0);
        CHECK(rep.negative_volume > 0.0);
    }
    SECTION("three photons") {
        auto g = wigner(density_from(fock_single(m, 3)), small_spec());
        for (std::size_t i = 0; i < 41; i += 3)
            for (std::size_t j = 0; j < 41; j += 5) {
                const double x = g.re_alpha[i], y = g.im_alpha[j];
                const double s = 4.0 * (x * x + y * y);
                const double want =
                    -(2.0 / pi) * std::exp(-0.5 * s) * std::laguerre(3, s);
                CHECK(std::abs(g.values(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j)) -
                               want) < 1e-8);
            }
        CHECK(std::abs(grid_integral(g) - 1.0) < 1e-2);
    }
}

TEST_CASE("wigner is linear in the state") {
    auto r1 = random_density(8, 1);
    auto r2 = random_density(8, 2);
    const double lam = 0.3;
    Matrix mix = lam * r1 + (1.0 - lam) * r2;
    WignerSpec s;
    s.n_x = s.n_p = 15;
    s.radius = 3.0;
    auto g1 = wigner(r1, s), g2 = wigner(r2, s), gm = wigner(mix, s);
    CHECK((gm.values - lam * g1.values - (1.0 - lam) * g2.values)
              .cwiseAbs()
              .maxCoeff() < 1e-10);
}

TEST_CASE("wigner rotation covariance") {
    // quarter turn: the rotated state's grid is the original grid rotated
    Matrix rho = random_density(7, 5);
    Matrix U = Matrix::Zero(7, 7);
    for (Eigen::Index n = 0; n < 7; ++n) U(n, n) = std::exp(cplx(0.0, 0.5 * pi * n));
    Matrix rot = U * rho * U.adjoint();
    WignerSpec s;
    s.n_x = s.n_p = 21;
    s.radius = 3.0;
    auto g = wigner(rho, s);
    auto gr = wigner(rot, s);
    for (std::size_t i = 0; i < 21; ++i)
        for (std::size_t j = 0; j < 21; ++j)
            CHECK(std::abs(gr.values(static_cast<Eigen::Index>(i),
                                     static_cast<Eigen::Index>(j)) -
                           g.values(static_cast<Eigen::Index>(j),
                                    static_cast<Eigen::Index>(20 - i))) < 1e-9);
}

TEST_CASE("wigner marginals carry the quadrature moments") {
    ModeSpace m(30);
    const cplx beta(-0.7, 0.9);
    auto g = wigner(density_from(coherent_single(m, beta)), small_spec());
    const double hx = g.re_alpha[1] - g.re_alpha[0];
    const double hy = g.im_alpha[1] - g.im_alpha[0];
    double mass = 0.0, mx = 0.0, mx2 = 0.0;
    for (std::size_t i = 0; i < g.re_alpha.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < g.im_alpha.size(); ++j)
            row += g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const double p = row * hx * hy;
        mass += p;
        mx += g.re_alpha[i] * p;
        mx2 += g.re_alpha[i] * g.re_alpha[i] * p;
    }
    CHECK(std::abs(mass - 1.0) < 1e-2);
    CHECK(std::abs(mx - beta.real()) < 1e-2);
    CHECK(std::abs(mx2 - mx * mx - 0.25) < 1e-2);  // vacuum-width gaussian
}

TEST_CASE("wigner respects the parity lower bound") {
    for (unsigned seed = 20; seed < 24; ++seed) {
        auto g = wigner(random_density(6, seed), small_spec());
        CHECK(g.values.minCoeff() >= -2.0 / pi - 1e-6);
    }
}

TEST_CASE("truncation warning fires on heavy top occupation") {
    ModeSpace m(5);
    auto g = wigner(thermal_single(m, 2.0), small_spec());
    CHECK(g.truncation_warning);
    CHECK(g.top_population > 1e-4);
}

TEST_CASE("wigner input validation") {
    WignerSpec bad;
    bad.n_x = 1;
    ModeSpace m(4);
    CHECK_THROWS_AS(wigner(density_from(fock_single(m, 0)), bad), std::invalid_argument);
    bad = WignerSpec{};
    bad.radius = 0.0;
    CHECK_THROWS_AS(wigner(density_from(fock_single(m, 0)), bad), std::invalid_argument);
}
