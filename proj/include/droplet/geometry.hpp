#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "droplet/special.hpp"

namespace droplet {

using Complex = std::complex<double>;

enum class ModelKind { Plane, ProjectiveLine };

/// A point of the model in its affine chart coordinate. For the projective
/// line the chart containing z = 0 is used throughout; the point at infinity
/// never enters any quadrature or sampler.
struct Point {
    Complex z;
};

/// One of the two concrete model geometries:
///   Plane           Bargmann-Fock plane, weight e^{-p pi |z|^2}, rotation action
///   ProjectiveLine  Fubini-Study sphere of total volume 1, rotation action
/// The projective line carries the monomial degree s at which the circle
/// weight vanishes, together with the power p that ratio refers to; the
/// moment map is shifted so that its zero level sits at that latitude.
class ModelGeometry {
public:
    static ModelGeometry plane() {
        ModelGeometry m;
        m.kind_ = ModelKind::Plane;
        m.description_ = "bargmann-fock plane";
        return m;
    }

    static ModelGeometry projective_line(int p, int weight_shift = -1) {
        if (weight_shift < 0) weight_shift = p / 2;
        if (!(0 < weight_shift && weight_shift < p))
            throw std::invalid_argument("projective_line: weight shift must satisfy 0 < s < p");
        ModelGeometry m;
        m.kind_ = ModelKind::ProjectiveLine;
        m.weight_shift_ = weight_shift;
        m.power_ = p;
        m.description_ = "fubini-study projective line (s=" + std::to_string(weight_shift) +
                         ", p=" + std::to_string(p) + ")";
        return m;
    }

    ModelKind kind() const { return kind_; }
    int weight_shift() const { return weight_shift_; }
    int power() const { return power_; }
    const std::string& description() const { return description_; }

    /// Monomial degree shift at the given power: weight(z^k) = k - shift.
    int shift_at(int p) const { return kind_ == ModelKind::Plane ? p : weight_shift_; }

    bool is_plane() const { return kind_ == ModelKind::Plane; }

private:
    ModelKind kind_ = ModelKind::Plane;
    int weight_shift_ = 0;  // ProjectiveLine only
    int power_ = 0;         // ProjectiveLine only
    std::string description_;
};

/// Kostant moment map of the rotation action.
inline double moment_map(const ModelGeometry& model, Point x) {
    double r2 = std::norm(x.z);
    if (model.is_plane()) return M_PI * r2 - 1.0;
    return r2 / (1.0 + r2) - static_cast<double>(model.weight_shift()) / model.power();
}

/// Riemannian norm of the fundamental vector field; equals |d mu| pointwise.
inline double fundamental_field_norm(const ModelGeometry& model, Point x) {
    double r = std::abs(x.z);
    if (model.is_plane()) return 2.0 * M_PI * r;
    return 2.0 * std::sqrt(M_PI) * r / (1.0 + r * r);
}

/// Circle action in the chart, phi_t(z) = e^{2 pi i t} z.
inline Point rotate(const ModelGeometry&, Point x, double t) {
    double a = 2.0 * M_PI * t;
    return Point{x.z * Complex(std::cos(a), std::sin(a))};
}

/// Density of the Riemannian volume form against Lebesgue measure in the chart.
inline double volume_density(const ModelGeometry& model, Point x) {
    if (model.is_plane()) return 1.0;
    double q = 1.0 + std::norm(x.z);
    return 1.0 / (M_PI * q * q);
}

/// Conformal factor of the model metric, g = lambda (dx^2 + dy^2). For these
/// two-dimensional models it coincides with the volume density.
inline double metric_conformal_factor(const ModelGeometry& model, Point x) {
    return volume_density(model, x);
}

inline double log_fiber_weight(const ModelGeometry& model, int p, Point x) {
    if (p < 1) throw std::invalid_argument("fiber_weight: p must be >= 1");
    if (model.is_plane()) return -0.5 * p * M_PI * std::norm(x.z);
    return -0.5 * p * std::log1p(std::norm(x.z));
}

/// Pointwise Hermitian norm of the unit frame at power p.
inline double fiber_weight(const ModelGeometry& model, int p, Point x) {
    return std::exp(log_fiber_weight(model, p, x));
}

/// Orthonormal monomial basis data at power p. Degrees k = 0..shift carry the
/// nonpositive circle weights m = k - shift and span the N_p-dimensional
/// sampling space; log_c2 is defined for every admissible degree so kernel
/// sums over positive weights can reuse it.
struct SectionBasis {
    ModelKind kind;
    int p = 0;
    int shift = 0;       // weight(z^k) = k - shift
    int max_degree = 0;  // largest admissible degree (plane: no hard cap)
    bool degree_capped = false;

    int dimension() const { return shift + 1; }  // N_p
    int weight_of_degree(int k) const { return k - shift; }

    /// ln c_k^2 for the L^2-normalized section c_k z^k (unit frame weights
    /// included in the norm).
    double log_c2(int k) const {
        if (k < 0 || (degree_capped && k > max_degree))
            throw std::out_of_range("log_c2: degree outside basis range");
        double kd = k;
        if (kind == ModelKind::Plane)
            return std::log(static_cast<double>(p)) + kd * std::log(p * M_PI) - std::lgamma(kd + 1.0);
        return std::log(p + 1.0) + log_binomial(p, kd);
    }

    double c2(int k) const { return std::exp(log_c2(k)); }
};

inline SectionBasis section_basis(const ModelGeometry& model, int p) {
    if (p < 1) throw std::invalid_argument("section_basis: p must be >= 1");
    SectionBasis b;
    b.kind = model.kind();
    b.p = p;
    if (model.is_plane()) {
        b.shift = p;
        b.max_degree = p;  // weights m <= 0
        b.degree_capped = false;
    } else {
        int s = model.weight_shift();
        if (!(0 < s && s < p))
            throw std::invalid_argument("section_basis: weight shift must satisfy 0 < s < p");
        b.shift = s;
        b.max_degree = p;
        b.degree_capped = true;
    }
    return b;
}

/// Geodesic distance between chart points in the model metric.
inline double geodesic_distance(const ModelGeometry& model, Point x, Point y) {
    if (model.is_plane()) return std::abs(x.z - y.z);
    double chord = std::abs(x.z - y.z) /
                   std::sqrt((1.0 + std::norm(x.z)) * (1.0 + std::norm(y.z)));
    chord = std::min(1.0, chord);
    // round sphere of radius 1/(2 sqrt(pi)) has total area 1
    return std::asin(chord) / std::sqrt(M_PI);
}

/// Chart coordinate of the droplet boundary (mu = 0) on the positive real axis.
inline Point boundary_base_point(const ModelGeometry& model) {
    if (model.is_plane()) return Point{Complex(1.0 / std::sqrt(M_PI), 0.0)};
    double t0 = static_cast<double>(model.weight_shift()) / model.power();
    return Point{Complex(std::sqrt(t0 / (1.0 - t0)), 0.0)};
}

} // namespace droplet
