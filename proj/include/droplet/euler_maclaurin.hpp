#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "droplet/quadrature.hpp"
#include "droplet/special.hpp"

namespace droplet::em {

/// Coefficients of the half-line Euler-Maclaurin formula under the ceiling
/// remainder convention,
///   sum_{m>=0} f(m) = int_0^inf f + sum_{j<r} a_j f^(j)(0) + remainder,
/// for f decaying with all derivatives. a_0 = 1/2 and the odd coefficients
/// come from Bernoulli numbers, a_j = -B_{j+1}/(j+1)!; even j >= 2 vanish.
struct EmCoefficients {
    int order;
    std::vector<double> a;
};

inline constexpr int kMaxEmOrder = 8;

inline EmCoefficients em_coefficients(int r) {
    if (r < 1 || r > kMaxEmOrder)
        throw std::invalid_argument("em_coefficients: order must be in [1, 8]");
    static const double table[kMaxEmOrder] = {
        0.5,
        -1.0 / 12.0,
        0.0,
        1.0 / 720.0,
        0.0,
        -1.0 / 30240.0,
        0.0,
        1.0 / 1209600.0,
    };
    EmCoefficients c;
    c.order = r;
    c.a.assign(table, table + r);
    return c;
}

/// int_0^inf f(t) dt for integrable decaying f: composite Gauss-Legendre on
/// doubling panels, stopping when two consecutive panels are negligible.
inline double halfline_integral(const std::function<double(double)>& f) {
    const auto& [gx, gw] = detail::gauss_legendre(64);
    double total = 0.0;
    double lo = 0.0, hi = 1.0;
    int quiet = 0;
    for (int panel = 0; panel < 64 && quiet < 2; ++panel) {
        double c = 0.5 * (hi + lo), h = 0.5 * (hi - lo);
        Kahan<double> acc;
        for (std::size_t i = 0; i < gx.size(); ++i) acc.add(gw[i] * f(c + h * gx[i]));
        double contrib = h * acc.value();
        total += contrib;
        quiet = std::abs(contrib) <= 1e-16 * (std::abs(total) + 1e-300) ? quiet + 1 : 0;
        lo = hi;
        hi *= 2.0;
    }
    return total;
}

/// Truncated Euler-Maclaurin value int_0^inf f + sum_{j<r} a_j f^(j)(0).
/// derivatives_at_0[j] must hold f^(j)(0); the remainder is the caller's
/// to bound.
inline double em_sum(const std::function<double(double)>& f,
                     const std::vector<double>& derivatives_at_0, int r) {
    EmCoefficients c = em_coefficients(r);
    if (static_cast<int>(derivatives_at_0.size()) < r)
        throw std::invalid_argument("em_sum: need r derivatives at 0");
    double s = halfline_integral(f);
    for (int j = 0; j < r; ++j) s += c.a[j] * derivatives_at_0[j];
    return s;
}

// ---------------------------------------------------------------------------
// Shifted-Gaussian lattice sums. The brute sums below are the module's
// ground truth; the companion predictors return the leading Euler-Maclaurin
// terms they are tested against.

/// sum_{m in N} e^{-2 pi (v - m/(a sqrt p))^2}, truncated sigma_mult standard
/// deviations past the lattice Gaussian's bulk (terms beyond carry less than
/// e^{-sigma_mult^2/2} relative weight).
inline double gaussian_halfline_sum(double v, double a, long long p, double sigma_mult = 12.0) {
    if (!(a > 0.0) || p < 1) throw std::invalid_argument("gaussian_halfline_sum: need a > 0, p >= 1");
    double asp = a * std::sqrt(static_cast<double>(p));
    double center = v * asp;
    double sigma = asp / (2.0 * std::sqrt(M_PI));
    long long lo = std::max<long long>(0, static_cast<long long>(std::floor(center - sigma_mult * sigma)) - 2);
    long long hi = std::max<long long>(lo, static_cast<long long>(std::ceil(center + sigma_mult * sigma)) + 2);
    Kahan<double> acc;
    for (long long m = lo; m <= hi; ++m) {
        double d = v - static_cast<double>(m) / asp;
        acc.add(std::exp(-2.0 * M_PI * d * d));
    }
    return acc.value();
}

inline double gaussian_halfline_leading(double v, double a, long long p) {
    return a * std::sqrt(static_cast<double>(p)) * gaussian_tail_integral(v);
}

/// sum_{m in N} (m/sqrt p)^k e^{-2 pi (v - m/(a sqrt p))^2}.
inline double gaussian_moment_sum(double v, double a, long long p, int k, double sigma_mult = 12.0) {
    if (!(a > 0.0) || p < 1 || k < 0)
        throw std::invalid_argument("gaussian_moment_sum: need a > 0, p >= 1, k >= 0");
    double asp = a * std::sqrt(static_cast<double>(p));
    double sp = std::sqrt(static_cast<double>(p));
    double center = v * asp;
    double sigma = asp / (2.0 * std::sqrt(M_PI));
    double widen = sigma_mult * sigma + 4.0 * (k + 1) * std::sqrt(sigma + 1.0);
    long long lo = std::max<long long>(0, static_cast<long long>(std::floor(center - widen)) - 2);
    long long hi = std::max<long long>(lo, static_cast<long long>(std::ceil(center + widen)) + 2);
    Kahan<double> acc;
    for (long long m = lo; m <= hi; ++m) {
        double d = v - static_cast<double>(m) / asp;
        acc.add(std::pow(static_cast<double>(m) / sp, k) * std::exp(-2.0 * M_PI * d * d));
    }
    return acc.value();
}

/// Leading term a^{k+1} sqrt(p) int_{-inf}^v (v-t)^k e^{-2 pi t^2} dt.
inline double gaussian_moment_leading(double v, double a, long long p, int k) {
    auto integrand = [&](double s) {  // s = v - t over [0, inf)
        double t = v - s;
        return std::pow(s, k) * std::exp(-2.0 * M_PI * t * t);
    };
    return std::pow(a, k + 1) * std::sqrt(static_cast<double>(p)) * halfline_integral(integrand);
}

/// Brute left side of the paired-sum identity:
///   sum e^{-2 pi [(v-m/(a sqrt p))^2 + (v-(m-k)/(a sqrt p))^2]}
///   - sum e^{-4 pi (v-m/(a sqrt p))^2}.
inline double paired_gaussian_difference(double v, double a, long long p, long long k,
                                         double sigma_mult = 12.0) {
    if (!(a > 0.0) || p < 1)
        throw std::invalid_argument("paired_gaussian_difference: need a > 0, p >= 1");
    double asp = a * std::sqrt(static_cast<double>(p));
    double center = v * asp;
    double sigma = asp / (2.0 * std::sqrt(M_PI));
    double widen = sigma_mult * sigma + static_cast<double>(std::llabs(k)) + 2.0;
    long long lo = std::max<long long>(0, static_cast<long long>(std::floor(center - widen)) - 2);
    long long hi = std::max<long long>(lo, static_cast<long long>(std::ceil(center + widen)) + 2);
    Kahan<double> paired, squared;
    for (long long m = lo; m <= hi; ++m) {
        double d1 = v - static_cast<double>(m) / asp;
        double d2 = v - static_cast<double>(m - k) / asp;
        paired.add(std::exp(-2.0 * M_PI * (d1 * d1 + d2 * d2)));
        // same expression shape so the k = 0 difference is exactly zero
        squared.add(std::exp(-2.0 * M_PI * (d1 * d1 + d1 * d1)));
    }
    return paired.value() - squared.value();
}

inline double paired_gaussian_leading(double v, long long k) {
    return 0.5 * static_cast<double>(k) * std::exp(-4.0 * M_PI * v * v);
}

} // namespace droplet::em
