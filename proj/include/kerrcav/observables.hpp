// observables.hpp — occupation statistics: mean numbers, Mandel Q, zero-delay
// g2, photon/exciton number distributions.  Moments are read off the diagonal
// of the reduced single-mode matrix.

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dynamics.hpp"

namespace kerrcav {

// mean occupation below which Q and g2 are numerically meaningless
inline constexpr double kStatsGuard = 1e-9;

namespace detail {

struct NumberMoments {
    double n = 0.0;    // <n>
    double n2 = 0.0;   // <n²>
    double nn1 = 0.0;  // <n(n-1)>
};

inline NumberMoments number_moments(const Matrix& rho_mode) {
    NumberMoments m;
    for (Eigen::Index k = 0; k < rho_mode.rows(); ++k) {
        const double p = rho_mode(k, k).real();
        const double n = static_cast<double>(k);
        m.n += n * p;
        m.n2 += n * n * p;
        m.nn1 += n * (n - 1.0) * p;
    }
    return m;
}

}  // namespace detail

// ---- single-sample diagnostics ----

// reduced single-mode matrix overloads
inline double mean_number(const Matrix& rho_mode) {
    return detail::number_moments(rho_mode).n;
}

// Q = (<n²> - <n>² - <n>)/<n>, clamped at the variance bound -1
inline std::optional<double> mandel_q(const Matrix& rho_mode) {
    const auto m = detail::number_moments(rho_mode);
    if (m.n < kStatsGuard) return std::nullopt;
    return std::max(-1.0, (m.n2 - m.n * m.n - m.n) / m.n);
}

// g2(0) = <n(n-1)>/<n>²
inline std::optional<double> g2_zero(const Matrix& rho_mode) {
    const auto m = detail::number_moments(rho_mode);
    if (m.n < kStatsGuard) return std::nullopt;
    return std::max(0.0, m.nn1) / (m.n * m.n);
}

// composite-space overloads
inline double mean_number(const Matrix& rho, Mode mode, const CompositeSpace& space) {
    return mean_number(partial_trace(rho, mode, space));
}
inline std::optional<double> mandel_q(const Matrix& rho, Mode mode,
                                      const CompositeSpace& space) {
    return mandel_q(partial_trace(rho, mode, space));
}
inline std::optional<double> g2_zero(const Matrix& rho, Mode mode,
                                     const CompositeSpace& space) {
    return g2_zero(partial_trace(rho, mode, space));
}

// ---- number distribution ----

struct NumberDistribution {
    Mode mode = Mode::photon;
    double time = 0.0;
    std::vector<double> probabilities;  // indexed by occupation number

    std::size_t argmax() const {
        std::size_t best = 0;
        for (std::size_t n = 1; n < probabilities.size(); ++n)
            if (probabilities[n] > probabilities[best]) best = n;
        return best;
    }
};

inline NumberDistribution number_distribution(const Matrix& rho_mode, Mode mode,
                                              std::size_t max_n, double time = 0.0) {
    const auto cutoff = static_cast<std::size_t>(rho_mode.rows());
    if (max_n > cutoff)
        throw std::invalid_argument("number_distribution: max_n exceeds the mode cutoff");
    NumberDistribution d;
    d.mode = mode;
    d.time = time;
    d.probabilities.resize(max_n + 1, 0.0);
    for (std::size_t n = 0; n <= max_n && n < cutoff; ++n)
        d.probabilities[n] = rho_mode(static_cast<Eigen::Index>(n),
                                      static_cast<Eigen::Index>(n))
                                 .real();
    return d;
}

inline NumberDistribution number_distribution(const Matrix& rho, Mode mode,
                                              const CompositeSpace& space,
                                              std::size_t max_n, double time = 0.0) {
    return number_distribution(partial_trace(rho, mode, space), mode, max_n, time);
}

// ---- series over a record ----

struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> n_a, n_b;
    std::vector<double> q_a, q_b;    // NaN where invalid
    std::vector<double> g2_a, g2_b;  // NaN where invalid
    std::vector<bool> valid_a, valid_b;

    std::size_t size() const { return times.size(); }
};

inline ObservableSeries series_from_record(const EvolutionRecord& rec) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    ObservableSeries s;
    s.times = rec.times;
    const std::size_t n = rec.size();
    s.n_a.reserve(n);
    s.n_b.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        s.n_a.push_back(mean_number(rec.rho_a[k]));
        s.n_b.push_back(mean_number(rec.rho_b[k]));
        const auto qa = mandel_q(rec.rho_a[k]);
        const auto qb = mandel_q(rec.rho_b[k]);
        const auto ga = g2_zero(rec.rho_a[k]);
        const auto gb = g2_zero(rec.rho_b[k]);
        s.q_a.push_back(qa.value_or(nan));
        s.q_b.push_back(qb.value_or(nan));
        s.g2_a.push_back(ga.value_or(nan));
        s.g2_b.push_back(gb.value_or(nan));
        s.valid_a.push_back(qa.has_value());
        s.valid_b.push_back(qb.has_value());
    }
    return s;
}

}  // namespace kerrcav
