#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "droplet/geometry.hpp"
#include "droplet/kernels.hpp"
#include "droplet/rng.hpp"
#include "droplet/special.hpp"

namespace droplet {

/// One draw of the determinantal process: exactly N_p ordered points with
/// the log of their joint density and the RNG coordinates that produced them.
struct Configuration {
    std::vector<Point> points;
    double log_density = -std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

namespace detail {

/// Unit-frame values of all N_p basis sections at a point, computed from the
/// largest term outward so no intermediate underflows.
inline void basis_values(const ModelGeometry& model, const SectionBasis& basis, Point x,
                         std::vector<Complex>& out) {
    const int n = basis.dimension();
    out.assign(n, Complex(0.0, 0.0));
    const double r = std::abs(x.z);
    const double logfib = log_fiber_weight(model, basis.p, x);
    if (r == 0.0) {
        out[0] = std::exp(0.5 * basis.log_c2(0) + logfib);
        return;
    }
    const double logr = std::log(r);
    int k_star = std::clamp(peak_degree(model, basis.p, r, r), 0, n - 1);
    auto log_mag = [&](int k) { return 0.5 * basis.log_c2(k) + k * logr + logfib; };
    const double phase = std::arg(x.z);
    out[k_star] = std::polar(std::exp(log_mag(k_star)), k_star * phase);
    auto step_up = [&](int k) -> Complex {  // b_{k+1}/b_k
        if (basis.kind == ModelKind::Plane)
            return x.z * std::sqrt(basis.p * M_PI / (k + 1.0));
        return x.z * std::sqrt(static_cast<double>(basis.p - k) / (k + 1.0));
    };
    for (int k = k_star; k + 1 < n; ++k) out[k + 1] = out[k] * step_up(k);
    for (int k = k_star; k > 0; --k) out[k - 1] = out[k] / step_up(k - 1);
}

inline double norm2(const std::vector<Complex>& v) {
    Kahan<double> s;
    for (const auto& c : v) s.add(std::norm(c));
    return s.value();
}

inline Complex dot(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    Kahan<Complex> s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add(std::conj(a[i]) * b[i]);
    return s.value();
}

} // namespace detail

/// Gram-Schmidt state of the sequential sampler: orthonormalized coefficient
/// vectors of the kernel columns at the accepted points.
struct SamplerState {
    std::vector<std::vector<Complex>> ortho;
    std::vector<Point> accepted;
    int total_rank = 0;

    int remaining_rank() const { return total_rank - static_cast<int>(accepted.size()); }

    /// Residual kernel diagonal at x given the basis values there.
    double residual_diag(const std::vector<Complex>& b) const {
        double val = detail::norm2(b);
        for (const auto& u : ortho) val -= std::norm(detail::dot(u, b));
        return val;
    }
};

/// Log density of the determinantal measure at an ordered configuration:
/// ln[(1/N_p!)|det(s_j(x_i))|^2], fiber weights included. Coincident points
/// give -inf. The determinant modulus comes from row Gram-Schmidt residuals.
inline double slater_log_density(const ModelGeometry& model, int p, const std::vector<Point>& points) {
    const SectionBasis basis = section_basis(model, p);
    const int n = basis.dimension();
    if (static_cast<int>(points.size()) != n)
        throw std::invalid_argument("slater_log_density: configuration size must equal N_p");
    std::vector<std::vector<Complex>> rows(n);
    double log_det2 = 0.0;
    std::vector<Complex> b;
    for (int i = 0; i < n; ++i) {
        detail::basis_values(model, basis, points[i], b);
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < i; ++j) {
                Complex c = detail::dot(rows[j], b);
                for (int k = 0; k < n; ++k) b[k] -= c * rows[j][k];
            }
        double nn = std::sqrt(detail::norm2(b));
        if (!(nn > 0.0)) return -std::numeric_limits<double>::infinity();
        log_det2 += 2.0 * std::log(nn);
        rows[i] = b;
        for (auto& c : rows[i]) c /= nn;
    }
    return log_det2 - std::lgamma(n + 1.0);
}

/// Draws one configuration by the sequential conditional scheme: proposals
/// from the exact one-point density rho_1/N_p (an equal-weight mixture of
/// |basis section|^2 densities, sampled by a Gamma or Beta radius and a
/// uniform angle), thinned against the Gram-Schmidt residual diagonal. The
/// proposal dominates the residual pointwise, so acceptance is
/// residual/diagonal with mean n_i/N_p at step i.
inline Configuration hkpv_sample(const ModelGeometry& model, int p, Rng& rng) {
    const SectionBasis basis = section_basis(model, p);
    const int n = basis.dimension();
    SamplerState state;
    state.total_rank = n;
    state.ortho.reserve(n);

    Configuration cfg;
    cfg.points.reserve(n);
    cfg.seed = rng.seed();
    cfg.stream = rng.stream();
    double log_det2 = 0.0;

    std::vector<Complex> b;
    long long rejections = 0;
    while (static_cast<int>(cfg.points.size()) < n) {
        int k = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
        double r;
        if (model.is_plane()) {
            double g = rng.gamma(k + 1.0);
            r = std::sqrt(g / (p * M_PI));
        } else {
            double t = rng.beta(k + 1.0, static_cast<double>(p - k) + 1.0);
            r = std::sqrt(t / (1.0 - t));
        }
        Point x{std::polar(r, 2.0 * M_PI * rng.uniform())};

        detail::basis_values(model, basis, x, b);
        double diag = detail::norm2(b);
        double residual = diag;
        std::vector<Complex> coeff(state.ortho.size());
        for (std::size_t j = 0; j < state.ortho.size(); ++j) {
            coeff[j] = detail::dot(state.ortho[j], b);
            residual -= std::norm(coeff[j]);
        }
        if (residual < -1e-9 * diag)
            throw std::runtime_error("hkpv_sample: residual diagonal went negative");
        residual = std::max(residual, 0.0);

        if (!(diag > 1e-280) || rng.uniform() * diag >= residual) {
            if (++rejections > 1000000)
                throw std::runtime_error("hkpv_sample: rejection stall (over 1e6 consecutive rejections)");
            continue;
        }
        rejections = 0;

        for (std::size_t j = 0; j < state.ortho.size(); ++j)
            for (int i = 0; i < n; ++i) b[i] -= coeff[j] * state.ortho[j][i];
        // second orthogonalization pass for stability
        for (std::size_t j = 0; j < state.ortho.size(); ++j) {
            Complex c = detail::dot(state.ortho[j], b);
            for (int i = 0; i < n; ++i) b[i] -= c * state.ortho[j][i];
        }
        double nn = std::sqrt(detail::norm2(b));
        if (!(nn > 0.0)) continue;
        log_det2 += 2.0 * std::log(nn);
        for (auto& c : b) c /= nn;
        state.ortho.push_back(b);
        state.accepted.push_back(x);
        cfg.points.push_back(x);
    }
    cfg.log_density = log_det2 - std::lgamma(n + 1.0);
    return cfg;
}

/// One-point correlation function (with respect to dv_X).
inline double rho1(const ModelGeometry& model, int p, Point x) {
    return partial_kernel_diag(model, p, x);
}

/// Two-point correlation function rho1(x) rho1(y) - |K(x,y)|^2.
inline double rho2(const ModelGeometry& model, int p, Point x, Point y) {
    double d = rho1(model, p, x) * rho1(model, p, y) - std::norm(partial_kernel(model, p, x, y));
    return d;
}

/// Rotation-invariant shortcut for the plane model: the squared moduli of
/// the points are independent, p pi r_k^2 ~ Gamma(k,1) for k = 1..p+1. Valid
/// for statistics of the moduli only.
inline std::vector<double> kostlan_radii_sample(int p, Rng& rng) {
    if (p < 0) throw std::invalid_argument("kostlan_radii_sample: p must be >= 0");
    double c = std::max(p, 1) * M_PI;
    std::vector<double> radii(p + 1);
    for (int k = 1; k <= p + 1; ++k)
        radii[k - 1] = std::sqrt(rng.gamma(static_cast<double>(k)) / c);
    return radii;
}

} // namespace droplet
