#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "droplet/geometry.hpp"
#include "droplet/parallel.hpp"
#include "droplet/special.hpp"

namespace droplet {

namespace detail {

/// Gauss-Legendre nodes/weights on [-1,1], Newton iteration on the
/// three-term recurrence. Memoized per order.
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    std::vector<double> x(n), w(n);
    int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

inline void append_panel(std::vector<double>& x, std::vector<double>& w,
                         double lo, double hi, int n) {
    if (n <= 0 || hi <= lo) return;
    const auto& [gx, gw] = gauss_legendre(n);
    double c = 0.5 * (hi + lo), h = 0.5 * (hi - lo);
    for (int i = 0; i < n; ++i) {
        x.push_back(c + h * gx[i]);
        w.push_back(h * gw[i]);
    }
}

} // namespace detail

/// Tensor polar grid on the chart disk of radius R. Radial nodes are
/// Gauss-Legendre panels in a mapped coordinate (u = r^2 on the plane,
/// t = r^2/(1+r^2) on the projective line) with a refined panel across the
/// droplet edge; `radial_weight` represents integration against r dr, so a
/// full node weight is radial_weight * (2 pi / n_angular) for Lebesgue
/// measure in the chart.
struct PlanarGrid {
    std::vector<double> radius;
    std::vector<double> radial_weight;
    int n_angular = 0;
    double R = 0.0;
    std::shared_ptr<PlanarGrid> coarse;  // 1/16 node density, for far-field passes

    double sum_weights() const {
        Kahan<double> s;
        for (double w : radial_weight) s.add(w);
        return s.value() * 2.0 * M_PI;
    }
};

/// Truncation radius covering the droplet plus the sub-Gaussian tail of the
/// partial kernel, so the omitted diagonal mass is below 1e-10 N_p. On the
/// projective line the cut latitude is found by bisection on the exact
/// binomial tail: the omitted mass is bounded by (p+1)(1-t)BinCDF(s;p,t)
/// since the CDF decreases in t.
inline double truncation_radius(const ModelGeometry& model, int p) {
    if (p < 1) throw std::invalid_argument("truncation_radius: p must be >= 1");
    double sp = std::sqrt(static_cast<double>(p));
    if (model.is_plane())
        return 1.0 / std::sqrt(M_PI) + 10.0 / sp + 8.0 * std::sqrt(std::log(static_cast<double>(p))) / sp;
    int s = model.weight_shift();
    double t0 = static_cast<double>(s) / p;
    double target = 1e-11 * (s + 1.0);
    auto omitted = [&](double t) { return (p + 1.0) * (1.0 - t) * binomial_cdf(s, p, t); };
    double lo = t0, hi = 1.0 - 1e-12;
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        if (omitted(mid) > target) lo = mid; else hi = mid;
        if (hi - lo < 1e-14) break;
    }
    return std::sqrt(hi / (1.0 - hi));
}

namespace detail {

struct RadialLayout {
    std::vector<double> nodes;    // in the mapped coordinate
    std::vector<double> weights;  // for integration in the mapped coordinate
};

/// Panels [0,a], [a,edge], [edge,b], [b,top] with a cut exactly at the
/// droplet edge, so indicator integrands split at mu = 0 stay spectrally
/// accurate, and a refined band of half_width on both sides of the edge.
inline RadialLayout radial_panels(double edge, double half_width, double top, int n) {
    RadialLayout out;
    std::vector<double> cuts = {0.0};
    double a = edge - half_width, b = edge + half_width;
    if (a > 0.02 * top) cuts.push_back(a);
    if (edge > 0.0 && edge < top) cuts.push_back(edge);
    if (b < 0.98 * top && b > cuts.back()) cuts.push_back(b);
    cuts.push_back(top);

    std::size_t panels = cuts.size() - 1;
    std::vector<double> frac;
    if (panels == 4) frac = {0.30, 0.20, 0.20, 0.30};
    else if (panels == 3) frac = {0.40, 0.25, 0.35};
    else if (panels == 2) frac = {0.55, 0.45};
    else frac = {1.0};
    for (std::size_t i = 0; i < panels; ++i) {
        int ni = std::max(24, static_cast<int>(std::lround(frac[i] * n)));
        detail::append_panel(out.nodes, out.weights, cuts[i], cuts[i + 1], ni);
    }
    return out;
}

inline PlanarGrid build_grid(const ModelGeometry& model, int p, int n_rad, int n_ang, bool with_coarse) {
    PlanarGrid g;
    g.R = truncation_radius(model, p);
    g.n_angular = n_ang;
    double sp = std::sqrt(static_cast<double>(p));
    RadialLayout lay;
    if (model.is_plane()) {
        double top = g.R * g.R;
        lay = radial_panels(1.0 / M_PI, 14.0 / (M_PI * sp), top, n_rad);
        g.radius.reserve(lay.nodes.size());
        g.radial_weight.reserve(lay.nodes.size());
        for (std::size_t i = 0; i < lay.nodes.size(); ++i) {
            g.radius.push_back(std::sqrt(lay.nodes[i]));
            g.radial_weight.push_back(0.5 * lay.weights[i]);  // r dr = du/2
        }
    } else {
        double t_top = g.R * g.R / (1.0 + g.R * g.R);
        double t0 = static_cast<double>(model.weight_shift()) / p;
        lay = radial_panels(t0, 8.0 / sp, t_top, n_rad);
        for (std::size_t i = 0; i < lay.nodes.size(); ++i) {
            double t = lay.nodes[i];
            g.radius.push_back(std::sqrt(t / (1.0 - t)));
            g.radial_weight.push_back(0.5 * lay.weights[i] / ((1.0 - t) * (1.0 - t)));
        }
    }
    if (with_coarse) {
        g.coarse = std::make_shared<PlanarGrid>(
            build_grid(model, p, std::max(24, n_rad / 4), std::max(8, n_ang / 4), false));
    }
    return g;
}

} // namespace detail

/// Default grid sized for the oscillation scale at power p.
inline PlanarGrid make_grid(const ModelGeometry& model, int p, int n_radial = 0, int n_angular = 0) {
    if (n_radial <= 0) n_radial = p <= 400 ? 400 : static_cast<int>(std::ceil(20.0 * std::sqrt(double(p))));
    if (n_angular <= 0) {
        n_angular = p <= 400 ? 256 : static_cast<int>(std::ceil(256.0 * std::sqrt(p / 400.0)));
        n_angular += n_angular % 2;
    }
    if (n_angular < 8 || n_angular % 2 != 0)
        throw std::invalid_argument("make_grid: angular count must be even and >= 8");
    return detail::build_grid(model, p, n_radial, n_angular, true);
}

/// Uniform trapezoid rule on [0,1); exact for trigonometric polynomials of
/// degree < n.
inline Complex circle_integrate(const std::function<Complex(double)>& g, int n) {
    if (n < 2) throw std::invalid_argument("circle_integrate: need n >= 2");
    Kahan<Complex> acc;
    for (int j = 0; j < n; ++j) acc.add(g(static_cast<double>(j) / n));
    return acc.value() / static_cast<double>(n);
}

inline Complex plane_integrate(const std::function<Complex(Complex)>& g, const PlanarGrid& grid) {
    Kahan<Complex> acc;
    double dphi = 2.0 * M_PI / grid.n_angular;
    for (std::size_t i = 0; i < grid.radius.size(); ++i) {
        Kahan<Complex> ring;
        for (int j = 0; j < grid.n_angular; ++j) {
            double phi = dphi * j;
            ring.add(g(std::polar(grid.radius[i], phi)));
        }
        acc.add(ring.value() * (grid.radial_weight[i] * dphi));
    }
    return acc.value();
}

struct IntegralResult {
    Complex value;
    double tail_fraction = 0.0;  // share carried by the outer 10% annulus
};

/// Same rule, plus a monitor flagging integrands that have not decayed by the
/// truncation radius (tail_fraction near the annulus area share means no decay).
inline IntegralResult plane_integrate_monitored(const std::function<Complex(Complex)>& g,
                                                const PlanarGrid& grid) {
    Kahan<Complex> acc, tail;
    double dphi = 2.0 * M_PI / grid.n_angular;
    double r_tail = 0.9 * grid.R;
    for (std::size_t i = 0; i < grid.radius.size(); ++i) {
        Kahan<Complex> ring;
        for (int j = 0; j < grid.n_angular; ++j)
            ring.add(g(std::polar(grid.radius[i], dphi * j)));
        Complex contrib = ring.value() * (grid.radial_weight[i] * dphi);
        acc.add(contrib);
        if (grid.radius[i] > r_tail) tail.add(contrib);
    }
    IntegralResult out;
    out.value = acc.value();
    double tot = std::abs(out.value);
    out.tail_fraction = tot > 0.0 ? std::abs(tail.value()) / tot : 0.0;
    return out;
}

/// Off-diagonal concentration hint for double integrals. `scale` is the
/// kernel width (1/sqrt(p) for the Bergman kernels) and sizes the fine inner
/// patch of radius 10*scale; ln|g(x,y)| <= log_amplitude - envelope_rate d^2
/// lets the far-field pass drop provably negligible nodes. scale = 0
/// disables the split and the inner integral runs over the full grid.
struct DecayHint {
    double scale = 0.0;
    double log_amplitude = 0.0;
    double envelope_rate = 0.0;  // 0: default pi/(2 scale^2)
    double outer_radius = std::numeric_limits<double>::infinity();
    int outer_angular = 0;  // 0: use the grid's angular count
};

namespace detail {

struct LocalDisk {
    std::vector<double> r, wr;
    int n_ang;
};

inline LocalDisk local_disk(double rho) {
    LocalDisk d;
    d.n_ang = 48;
    const auto& [gx, gw] = gauss_legendre(40);
    d.r.resize(gx.size());
    d.wr.resize(gx.size());
    for (std::size_t i = 0; i < gx.size(); ++i) {
        double r = 0.5 * rho * (gx[i] + 1.0);
        d.r[i] = r;
        d.wr[i] = 0.5 * rho * gw[i] * r;  // r dr
    }
    return d;
}

} // namespace detail

/// Nested product quadrature of a two-point integrand over the chart disk.
/// With a decay hint, the inner integral is a fine polar patch of radius
/// 10*scale around the outer node plus a far-field pass on the 1/16-density
/// coarse grid; without one it is the plain tensor rule. Deterministic:
/// outer partial sums are reduced in node order regardless of threading.
inline double double_integrate(const std::function<double(Complex, Complex)>& g,
                               const PlanarGrid& grid, const DecayHint& hint = {}) {
    int n_ang_out = hint.outer_angular > 0 ? hint.outer_angular : grid.n_angular;
    double dphi_out = 2.0 * M_PI / n_ang_out;
    double dphi_in = 2.0 * M_PI / grid.n_angular;

    const bool split = hint.scale > 0.0;
    double rho = split ? 10.0 * hint.scale : 0.0;
    detail::LocalDisk disk = split ? detail::local_disk(rho) : detail::LocalDisk{};
    const PlanarGrid* far = (split && grid.coarse) ? grid.coarse.get() : &grid;
    double dphi_far = 2.0 * M_PI / far->n_angular;
    // drop far nodes once the Gaussian envelope puts them below 1e-25 of scale
    double cut2 = std::numeric_limits<double>::infinity();
    if (split) {
        double rate = hint.envelope_rate > 0.0 ? hint.envelope_rate
                                               : M_PI / (2.0 * hint.scale * hint.scale);
        cut2 = (hint.log_amplitude + 58.0) / rate;
        cut2 = std::max(cut2, 4.0 * rho * rho);
    }

    std::vector<std::size_t> outer;
    for (std::size_t i = 0; i < grid.radius.size(); ++i)
        if (grid.radius[i] <= hint.outer_radius) outer.push_back(i);

    std::vector<double> partial(outer.size(), 0.0);
    parallel::parallel_for(outer.size(), [&](std::size_t oi) {
        std::size_t i = outer[oi];
        double r_out = grid.radius[i];
        Kahan<double> row;
        for (int j = 0; j < n_ang_out; ++j) {
            double phi = dphi_out * j;
            Complex x = std::polar(r_out, phi);
            Kahan<double> inner;
            if (!split) {
                for (std::size_t a = 0; a < grid.radius.size(); ++a) {
                    Kahan<double> ring;
                    for (int b = 0; b < grid.n_angular; ++b)
                        ring.add(g(x, std::polar(grid.radius[a], dphi_in * b)));
                    inner.add(ring.value() * (grid.radial_weight[a] * dphi_in));
                }
            } else {
                // fine patch, oriented along the outer node's radial direction
                for (std::size_t a = 0; a < disk.r.size(); ++a) {
                    Kahan<double> ring;
                    for (int b = 0; b < disk.n_ang; ++b) {
                        double psi = phi + 2.0 * M_PI * b / disk.n_ang;
                        ring.add(g(x, x + std::polar(disk.r[a], psi)));
                    }
                    inner.add(ring.value() * (disk.wr[a] * 2.0 * M_PI / disk.n_ang));
                }
                // coarse far field outside the patch
                for (std::size_t a = 0; a < far->radius.size(); ++a) {
                    Kahan<double> ring;
                    for (int b = 0; b < far->n_angular; ++b) {
                        Complex y = std::polar(far->radius[a], dphi_far * b);
                        double d2 = std::norm(y - x);
                        if (d2 <= rho * rho || d2 > cut2) continue;
                        ring.add(g(x, y));
                    }
                    inner.add(ring.value() * (far->radial_weight[a] * dphi_far));
                }
            }
            row.add(inner.value());
        }
        partial[oi] = row.value() * (grid.radial_weight[i] * dphi_out);
    });

    Kahan<double> total;
    for (double v : partial) total.add(v);
    return total.value();
}

} // namespace droplet
