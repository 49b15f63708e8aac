#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include "droplet/geometry.hpp"
#include "droplet/special.hpp"

namespace droplet {

/// Kernel values are taken in the unit-frame trivialization with both fiber
/// weights folded in, so |value| is the pointwise Hermitian norm of the
/// kernel section.
using KernelValue = Complex;

/// Bergman kernel of the full space of square-integrable holomorphic
/// sections at power p, in closed form, evaluated through log magnitude and
/// phase so no power of p overflows.
inline KernelValue full_kernel(const ModelGeometry& model, int p, Point x, Point y) {
    if (p < 1) throw std::invalid_argument("full_kernel: p must be >= 1");
    const Complex zw = x.z * std::conj(y.z);
    if (model.is_plane()) {
        double logmag = std::log(static_cast<double>(p)) - 0.5 * p * M_PI * std::norm(x.z - y.z);
        double phase = p * M_PI * zw.imag();
        return std::polar(std::exp(logmag), phase);
    }
    const Complex w = 1.0 + zw;
    double logmag = std::log(p + 1.0) + p * (std::log(std::abs(w)) -
                    0.5 * (std::log1p(std::norm(x.z)) + std::log1p(std::norm(y.z))));
    double phase = p * std::arg(w);
    return std::polar(std::exp(logmag), phase);
}

namespace detail {

/// Log magnitude of the degree-k term c_k^2 (z wbar)^k with fiber weights.
inline double log_term_mag(const SectionBasis& basis, const ModelGeometry& model,
                           int p, int k, double log_rz, double log_rw, double log_fibers) {
    if (k == 0) return basis.log_c2(0) + log_fibers;
    return basis.log_c2(k) + k * (log_rz + log_rw) + log_fibers;
}

/// Degree of the largest term of the monomial kernel series.
inline int peak_degree(const ModelGeometry& model, int p, double rz, double rw) {
    if (model.is_plane()) return static_cast<int>(p * M_PI * rz * rw);
    // binomial series peaks where (p-k)/(k+1) * rz*rw = 1
    double q = rz * rw;
    return static_cast<int>((p * q - 1.0) / (1.0 + q));
}

/// Sum of the degree range [k_lo, k_hi] of the monomial kernel series,
/// pivoted at the largest term and extended both ways with the exact term
/// ratio until the remainder is below 1e-18 of the running maximum.
inline KernelValue monomial_series(const ModelGeometry& model, int p, Point x, Point y,
                                   int k_lo, int k_hi) {
    const SectionBasis basis = section_basis(model, p);
    const double rz = std::abs(x.z), rw = std::abs(y.z);
    const double log_fibers = log_fiber_weight(model, p, x) + log_fiber_weight(model, p, y);
    if (rz == 0.0 || rw == 0.0) {
        if (k_lo > 0) return 0.0;
        return std::exp(basis.log_c2(0) + log_fibers);
    }
    const Complex zw = x.z * std::conj(y.z);
    const Complex dir = zw / std::abs(zw);
    const double log_rz = std::log(rz), log_rw = std::log(rw);

    int k_star = std::clamp(peak_degree(model, p, rz, rw), k_lo, k_hi);
    double log_peak = log_term_mag(basis, model, p, k_star, log_rz, log_rw, log_fibers);
    Complex t_star = std::polar(1.0, k_star * std::arg(zw));

    auto ratio_up = [&](int k) -> Complex {  // term(k+1)/term(k)
        if (model.is_plane()) return zw * (p * M_PI) / (k + 1.0);
        return zw * (static_cast<double>(p - k) / (k + 1.0));
    };

    Kahan<Complex> acc;
    acc.add(t_star);
    Complex t = t_star;
    for (int k = k_star; k < k_hi; ++k) {
        t *= ratio_up(k);
        acc.add(t);
        if (std::abs(t) < 1e-18) break;
    }
    t = t_star;
    for (int k = k_star; k > k_lo; --k) {
        t /= ratio_up(k - 1);
        acc.add(t);
        if (std::abs(t) < 1e-18) break;
    }
    return acc.value() * std::exp(log_peak);
}

} // namespace detail

/// Equivariant Bergman kernel of circle weight m: the single monomial term of
/// degree k = m + shift; identically zero outside the admissible degrees.
inline KernelValue equivariant_kernel(const ModelGeometry& model, int p, int m, Point x, Point y) {
    if (p < 1) throw std::invalid_argument("equivariant_kernel: p must be >= 1");
    const SectionBasis basis = section_basis(model, p);
    const int k = m + basis.shift;
    if (k < 0 || (basis.degree_capped && k > basis.max_degree)) return 0.0;
    const double rz = std::abs(x.z), rw = std::abs(y.z);
    const double log_fibers = log_fiber_weight(model, p, x) + log_fiber_weight(model, p, y);
    if (rz == 0.0 || rw == 0.0)
        return k == 0 ? std::exp(basis.log_c2(0) + log_fibers) : 0.0;
    double logmag = basis.log_c2(k) + k * (std::log(rz) + std::log(rw)) + log_fibers;
    double phase = k * std::arg(x.z * std::conj(y.z));
    return std::polar(std::exp(logmag), phase);
}

/// Independent oracle for the equivariant kernel: uniform-node quadrature of
/// the circle average of the full kernel against the character of weight m,
/// with the lift phase e^{-2 pi i t shift} of the rotated frame folded in.
inline KernelValue averaged_equivariant_oracle(const ModelGeometry& model, int p, int m,
                                               Point x, Point y, int n_nodes) {
    if (n_nodes < 4 * (p + std::abs(m)))
        throw std::invalid_argument("averaged_equivariant_oracle: need n_nodes >= 4(p+|m|)");
    const int freq = m + section_basis(model, p).shift;
    Kahan<Complex> acc;
    for (int j = 0; j < n_nodes; ++j) {
        double t = static_cast<double>(j) / n_nodes;
        double a = -2.0 * M_PI * t * freq;
        acc.add(std::polar(1.0, a) * full_kernel(model, p, rotate(model, x, t), y));
    }
    return acc.value() / static_cast<double>(n_nodes);
}

/// Degree cutoff beyond which the positive-weight tail of the plane kernel
/// series is below 1e-14 of the total (Poisson tail bound).
inline int plane_degree_cutoff(int p, Point x, Point y) {
    double lam = p * M_PI * std::abs(x.z) * std::abs(y.z);
    return static_cast<int>(lam + 12.0 * std::sqrt(lam + 1.0) + 40.0);
}

/// Partial Bergman kernel: the nonpositive-weight block, i.e. degrees
/// k = 0..shift of the monomial series, summed from the largest term outward.
inline KernelValue partial_kernel(const ModelGeometry& model, int p, Point x, Point y) {
    if (p < 1) throw std::invalid_argument("partial_kernel: p must be >= 1");
    return detail::monomial_series(model, p, x, y, 0, section_basis(model, p).shift);
}

/// Diagonal of the partial kernel on a dedicated stable path: the Poisson /
/// binomial CDF closed forms.
inline double partial_kernel_diag(const ModelGeometry& model, int p, Point x) {
    if (p < 1) throw std::invalid_argument("partial_kernel_diag: p must be >= 1");
    if (model.is_plane())
        return p * poisson_cdf(p, p * M_PI * std::norm(x.z));
    double r2 = std::norm(x.z);
    return (p + 1.0) * binomial_cdf(model.weight_shift(), p, r2 / (1.0 + r2));
}

// ---------------------------------------------------------------------------
// Local models near the droplet boundary.

/// Model chart vector: u along J xi / |xi| (geodesic units), perp in the
/// reduced directions, which are absent when n = 1.
struct LocalFrameVector {
    double u = 0.0;
    std::vector<double> perp;
};

/// Flat-space Bergman model exp(-pi/2 |Z-Z'|^2 - i pi omega(Z,Z')) on real
/// vectors paired as (x1,y1,x2,y2,...) with the standard symplectic form.
inline Complex local_model_full(const std::vector<double>& Z, const std::vector<double>& Zp) {
    if (Z.size() != Zp.size())
        throw std::invalid_argument("local_model_full: dimension mismatch");
    double d2 = 0.0, omega = 0.0;
    for (std::size_t i = 0; i < Z.size(); ++i) d2 += (Z[i] - Zp[i]) * (Z[i] - Zp[i]);
    for (std::size_t i = 0; i + 1 < Z.size(); i += 2)
        omega += Z[i] * Zp[i + 1] - Z[i + 1] * Zp[i];
    return std::polar(std::exp(-0.5 * M_PI * d2), -M_PI * omega);
}

struct EquivariantModelValue {
    double weight_gaussian = 0.0;          // the shifted Gaussian factor with its sqrt(2)/|xi| prefactor
    Complex value;                         // full model value including the perp factor
};

/// Local model of the weight-m equivariant kernel at a boundary point with
/// field norm |xi|; m enters through m/sqrt(p).
inline EquivariantModelValue local_model_equivariant(double m_over_sqrtp, double xi_norm,
                                                     double u, double up,
                                                     const std::vector<double>& perp = {},
                                                     const std::vector<double>& perp2 = {}) {
    if (!(xi_norm > 0.0))
        throw std::invalid_argument("local_model_equivariant: xi_norm must be positive");
    double center = 0.5 * (u + up) + m_over_sqrtp / xi_norm;
    EquivariantModelValue out;
    out.weight_gaussian = std::sqrt(2.0) / xi_norm * std::exp(-2.0 * M_PI * center * center);
    out.value = out.weight_gaussian * std::exp(-0.5 * M_PI * (u - up) * (u - up)) *
                local_model_full(perp, perp2);
    return out;
}

/// Local model of the partial kernel: erf profile in (u+u')/2 times the
/// transverse Gaussian.
inline Complex local_model_partial(double u, double up,
                                   const std::vector<double>& perp = {},
                                   const std::vector<double>& perp2 = {}) {
    double profile = std::sqrt(2.0) * gaussian_tail_integral(0.5 * (u + up));
    return profile * std::exp(-0.5 * M_PI * (u - up) * (u - up)) * local_model_full(perp, perp2);
}

/// Least-squares decay exponent of the full kernel: slope of
/// log|K_p(x,y)| - n log p against sqrt(p) d(x,y); returns the fitted c of
/// the e^{-c sqrt(p) d} envelope.
inline double decay_rate_fit(const ModelGeometry& model, Point x, Point y,
                             const std::vector<int>& p_list) {
    if (p_list.size() < 4) throw std::invalid_argument("decay_rate_fit: need >= 4 powers");
    double d = geodesic_distance(model, x, y);
    if (!(d > 0.0)) throw std::invalid_argument("decay_rate_fit: points must be distinct");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = p_list.size();
    for (int p : p_list) {
        double X = std::sqrt(static_cast<double>(p)) * d;
        double Y = std::log(std::abs(full_kernel(model, p, x, y))) - std::log(static_cast<double>(p));
        sx += X; sy += Y; sxx += X * X; sxy += X * Y;
    }
    double denom = sxx - sx * sx / n;
    if (!(denom > 1e-12)) throw std::invalid_argument("decay_rate_fit: degenerate fit");
    double slope = (sxy - sx * sy / n) / denom;
    return -slope;
}

} // namespace droplet
