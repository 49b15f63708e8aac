// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier Monte-Carlo criteria fan out over sampler streams.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "droplet/dpp.hpp"
#include "droplet/euler_maclaurin.hpp"
#include "droplet/kernels.hpp"
#include "droplet/parallel.hpp"
#include "droplet/quadrature.hpp"
#include "droplet/statistics.hpp"

using namespace droplet;

namespace {

const double kSqrtPi = std::sqrt(M_PI);
int g_failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    std::printf("%s  [%2d] %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------- criterion 1
void criterion_dimension() {
    ModelGeometry m = ModelGeometry::plane();
    bool ok = true;
    for (int p : {1, 10, 100, 1000}) ok = ok && section_basis(m, p).dimension() == p + 1;
    report(1, ok, "plane dimension N_p = p+1 for p in {1,10,100,1000}", ok ? "exact" : "mismatch");
}

// ---------------------------------------------------------------- criterion 2
void criterion_diagonal() {
    double worst = 0.0;
    for (int p : {2, 10, 100, 1000}) {
        Point x{Complex(0.31, -0.44)};
        worst = std::max(worst,
                         std::abs(full_kernel(ModelGeometry::plane(), p, x, x).real() / p - 1.0));
        worst = std::max(worst,
                         std::abs(full_kernel(ModelGeometry::projective_line(p), p, x, x).real() / p -
                                  (1.0 + 1.0 / p)));
    }
    report(2, worst <= 1e-12, "bergman diagonal: plane = p, sphere = p+1, closed forms",
           "max deviation " + fmt(worst));
}

// ---------------------------------------------------------------- criterion 3
double erf_profile_sup_error(int p) {
    ModelGeometry m = ModelGeometry::plane();
    double sup = 0.0;
    for (int i = -30; i <= 30; ++i) {
        double v = 0.1 * i;
        double r = std::sqrt((1.0 + v / std::sqrt(static_cast<double>(p))) / M_PI);
        double exact = partial_kernel_diag(m, p, {Complex(r, 0)}) / p;
        double su = -v / (2.0 * kSqrtPi);  // sqrt(p) * chart coordinate at mu = v/sqrt(p)
        double model = local_model_partial(su, su).real();
        sup = std::max(sup, std::abs(exact - model));
    }
    return sup;
}

void criterion_erf_profile() {
    double e100 = erf_profile_sup_error(100);
    double e400 = erf_profile_sup_error(400);
    double e1600 = erf_profile_sup_error(1600);
    double x1 = std::log(100.0), x2 = std::log(400.0), x3 = std::log(1600.0);
    double y1 = std::log(e100), y2 = std::log(e400), y3 = std::log(e1600);
    double sx = x1 + x2 + x3, sy = y1 + y2 + y3;
    double sxx = x1 * x1 + x2 * x2 + x3 * x3, sxy = x1 * y1 + x2 * y2 + x3 * y3;
    double slope = (sxy - sx * sy / 3.0) / (sxx - sx * sx / 3.0);
    bool ok = e400 <= 0.05 && std::abs(slope + 0.5) <= 0.15;
    report(3, ok, "erf boundary profile: sup_v error at p=400 <= 0.05, slope -0.5 +- 0.15",
           "err(400) = " + fmt(e400) + ", slope = " + fmt(slope));
}

// ---------------------------------------------------------------- criterion 4
double equivariant_model_rel_error(const ModelGeometry& m, int p) {
    Point x0 = boundary_base_point(m);
    double xi = fundamental_field_norm(m, x0);
    double sp = std::sqrt(static_cast<double>(p));
    double worst = 0.0;
    for (double mo : {0.0, -1.0, -2.0}) {
        int mm = static_cast<int>(std::lround(mo * sp));
        double kernel = equivariant_kernel(m, p, mm, x0, x0).real() / sp;
        double model =
            local_model_equivariant(static_cast<double>(mm) / sp, xi, 0.0, 0.0).value.real();
        worst = std::max(worst, std::abs(kernel - model) / model);
    }
    return worst;
}

void criterion_equivariant_model() {
    bool ok = true;
    std::string detail;
    for (bool plane : {true, false}) {
        ModelGeometry m100 = plane ? ModelGeometry::plane() : ModelGeometry::projective_line(100);
        ModelGeometry m400 = plane ? ModelGeometry::plane() : ModelGeometry::projective_line(400);
        double e100 = equivariant_model_rel_error(m100, 100);
        double e400 = equivariant_model_rel_error(m400, 400);
        ok = ok && e400 <= 0.06 && e400 < e100;
        detail += std::string(plane ? "plane " : "sphere ") + fmt(e400) + " ";
    }
    report(4, ok, "equivariant local model at the boundary: rel err <= 0.06 at p=400, improving",
           "err(400): " + detail);
}

// ---------------------------------------------------------------- criterion 5
void criterion_averaging_oracle() {
    Rng rng(424242);
    double worst = 0.0;
    bool ok = true;
    for (int trial = 0; trial < 50; ++trial) {
        bool use_plane = trial % 2 == 0;
        int p = use_plane ? 2 + static_cast<int>(rng.next_u64() % 19)
                          : 4 + 2 * static_cast<int>(rng.next_u64() % 9);
        ModelGeometry m = use_plane ? ModelGeometry::plane() : ModelGeometry::projective_line(p);
        int mm = -10 + static_cast<int>(rng.next_u64() % 21);
        Point x{std::polar(rng.uniform(0.15, 0.68), rng.uniform(0.0, 2 * M_PI))};
        Point y{std::polar(rng.uniform(0.15, 0.68), rng.uniform(0.0, 2 * M_PI))};
        int n = 4 * (p + std::abs(mm));
        if (m.is_plane()) {
            double lam = p * M_PI * std::abs(x.z) * std::abs(y.z);
            while (n < lam + 40 || n * std::log(lam / n) > -40.0) n += 16;
        }
        Complex closed = equivariant_kernel(m, p, mm, x, y);
        Complex averaged = averaged_equivariant_oracle(m, p, mm, x, y, n);
        double floor =
            1e-13 * p * std::exp(-0.5 * p * M_PI * std::pow(std::abs(x.z) - std::abs(y.z), 2));
        double err = std::abs(closed - averaged);
        double allowed = 1e-9 * std::abs(closed) + floor;
        if (std::abs(closed) > 0) worst = std::max(worst, err / (std::abs(closed) + floor));
        ok = ok && err <= allowed;
    }
    report(5, ok, "circle-averaging oracle matches closed-form weights to 1e-9 on 50 queries",
           "worst relative gap " + fmt(worst));
}

// ---------------------------------------------------------------- criterion 6
void criterion_euler_maclaurin() {
    double brute = em::gaussian_halfline_sum(1.0, 1.0, 10000);
    double lead = em::gaussian_halfline_leading(1.0, 1.0, 10000);
    bool em2_ok = std::abs(brute - lead) / lead < 1e-2;

    double worst = 0.0;
    for (double v : {0.0, 0.5, -0.5, 1.0, -1.0})
        for (long long k = 1; k <= 5; ++k) {
            double lhs = em::paired_gaussian_difference(v, 1.0, 10000, k);
            double bound = 3.0 * k * k / 100.0;
            double err = std::abs(lhs - em::paired_gaussian_leading(v, k));
            worst = std::max(worst, err / bound);
        }
    bool ok = em2_ok && worst <= 1.0;
    report(6, ok, "euler-maclaurin: em2 leading error < 1e-2; paired-sum bound 3k^2/sqrt(p)",
           "em2 rel " + fmt(std::abs(brute - lead) / lead) + ", worst bound share " + fmt(worst));
}

// ---------------------------------------------------------------- criterion 7
void criterion_forbidden_region() {
    const int p = 400;
    ModelGeometry m = ModelGeometry::plane();
    // quadrature over the annulus mu > 0.3, radial rule aligned at the cut
    double u_lo = 1.3 / M_PI;
    double R = truncation_radius(m, p);
    const auto& [gx, gw] = detail::gauss_legendre(400);
    Kahan<double> mass;
    for (int i = 0; i < 400; ++i) {
        double u = 0.5 * (R * R + u_lo) + 0.5 * (R * R - u_lo) * gx[i];
        double w = 0.5 * (R * R - u_lo) * gw[i] * 0.5;  // r dr = du/2
        mass.add(w * partial_kernel_diag(m, p, {Complex(std::sqrt(u), 0)}));
    }
    double value = 2.0 * M_PI * mass.value();
    // closed-form cross-check: sum_k P(Pois(1.3 p) <= k)
    Kahan<double> closed;
    for (int k = 0; k <= p; ++k) closed.add(poisson_cdf(k, 1.3 * p));
    bool ok = value < 1e-6 * (p + 1) && closed.value() < 1e-6 * (p + 1);
    report(7, ok, "forbidden-region vacuum: mass over {mu > 0.3} at p=400 below 1e-6 N_p",
           "quadrature " + fmt(value) + ", closed form " + fmt(closed.value()));
}

// ---------------------------------------------------------------- criterion 8
struct LlnStats {
    double mean_frac[2] = {0, 0};
    double dev_prob[2] = {0, 0};
};

LlnStats lln_run(int p, int n_samples, std::uint64_t seed) {
    ModelGeometry m = ModelGeometry::plane();
    const double rs[2] = {0.5, 0.9};
    std::vector<std::array<double, 2>> fr(n_samples);
    parallel::parallel_for(n_samples, [&](std::size_t i) {
        Rng rng(seed, i);
        Configuration c = hkpv_sample(m, p, rng);
        for (int ri = 0; ri < 2; ++ri) {
            int count = 0;
            for (const Point& x : c.points)
                if (std::abs(x.z) <= rs[ri] / kSqrtPi) ++count;
            fr[i][ri] = static_cast<double>(count) / c.points.size();
        }
    });
    LlnStats out;
    for (int ri = 0; ri < 2; ++ri) {
        double limit = rs[ri] * rs[ri];
        Kahan<double> mean;
        int exceed = 0;
        for (const auto& v : fr) {
            mean.add(v[ri]);
            if (std::abs(v[ri] - limit) > 0.05) ++exceed;
        }
        out.mean_frac[ri] = mean.value() / n_samples;
        out.dev_prob[ri] = static_cast<double>(exceed) / n_samples;
    }
    return out;
}

void criterion_circular_law() {
    const int n_samples = 200;
    LlnStats s100 = lln_run(100, n_samples, 8881);
    LlnStats s400 = lln_run(400, n_samples, 8882);
    bool ok = true;
    std::string detail;
    const double rs[2] = {0.5, 0.9};
    for (int ri = 0; ri < 2; ++ri) {
        double limit = rs[ri] * rs[ri];
        ok = ok && std::abs(s400.mean_frac[ri] - limit) <= 0.02;
        ok = ok && s400.dev_prob[ri] <= s100.dev_prob[ri];
        detail += "r=" + fmt(rs[ri]) + ": frac " + fmt(s400.mean_frac[ri]) + " dev " +
                  fmt(s100.dev_prob[ri]) + "->" + fmt(s400.dev_prob[ri]) + "  ";
    }
    report(8, ok, "circular law at p=400 (200 samples) and deviation monotonicity from p=100",
           detail);
}

// ---------------------------------------------------------------- criterion 9
void criterion_bulk_variance() {
    ModelGeometry m = ModelGeometry::plane();
    TestFunction f = radial_bump(0.12, 0.48);  // support inside {mu < -0.2}
    double bulk = limit_variance(m, f).bulk;
    double var = variance_exact(m, 400, f);
    double rel = std::abs(var - bulk) / bulk;
    report(9, rel <= 0.05, "bulk variance: interior radial bump matches (1/4pi) int |df|^2 at p=400",
           "var " + fmt(var) + " vs bulk " + fmt(bulk) + ", rel " + fmt(rel));
}

// --------------------------------------------------------------- criterion 10
void criterion_boundary_factor() {
    ModelGeometry m = ModelGeometry::plane();
    TestFunction f = angular_mode(m, 1);
    std::vector<int> ps{100, 200, 400, 800};
    std::vector<double> vars(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) vars[i] = variance_exact(m, ps[i], f);

    LimitVariance lv = limit_variance(m, f);
    // extrapolate V(p) = V_inf + c p^{-1/2} by least squares
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        double x = 1.0 / std::sqrt(static_cast<double>(ps[i]));
        sx += x; sy += vars[i]; sxx += x * x; sxy += x * vars[i];
    }
    double n = static_cast<double>(ps.size());
    double slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
    double vinf = (sy - slope * sx) / n;

    double pred1 = lv.bulk + 1.0 * lv.mode_sum;
    double predh = lv.bulk + 0.5 * lv.mode_sum;
    bool in1 = std::abs(vinf - pred1) <= 0.05 * pred1;
    bool inh = std::abs(vinf - predh) <= 0.05 * predh;
    bool ok = in1 != inh;
    const char* winner = inh ? "1/2" : (in1 ? "1" : "none");
    report(10, ok, "boundary variance factor: exactly one of {1, 1/2} matches within 5%",
           std::string("extrapolated ") + fmt(vinf) + ", bulk " + fmt(lv.bulk) + ", mode sum " +
               fmt(lv.mode_sum) + ", winner " + winner);
}

// --------------------------------------------------------------- criterion 11
void criterion_clt_normality() {
    ModelGeometry m = ModelGeometry::plane();
    TestFunction f = radial_bump(0.15, 0.45);
    StatisticsReport rep = mc_run(m, 200, f, 500, 1357911);
    bool ok = rep.has_ks && rep.ks_statistic < rep.ks_threshold;
    report(11, ok, "clt normality: KS of 500 standardized statistics below 1.36/sqrt(500)",
           "D = " + fmt(rep.ks_statistic) + " vs " + fmt(rep.ks_threshold));
}

// --------------------------------------------------------------- criterion 12
void criterion_dpp_structure() {
    bool ok = true;
    std::string detail;

    // Slater determinant identity at N_p <= 5
    {
        Rng rng(5150);
        double worst = 0.0;
        for (int rep = 0; rep < 8; ++rep) {
            bool plane = rep % 2 == 0;
            ModelGeometry m = plane ? ModelGeometry::plane() : ModelGeometry::projective_line(6, 2);
            int p = plane ? 4 : 6;
            int n = section_basis(m, p).dimension();
            std::vector<Point> pts(n);
            for (auto& x : pts)
                x = Point{std::polar(rng.uniform(0.05, 1.0), rng.uniform(0.0, 2 * M_PI))};
            double lhs = std::exp(slater_log_density(m, p, pts) + std::lgamma(n + 1.0));
            std::vector<Complex> a(n * n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) a[i * n + j] = partial_kernel(m, p, pts[i], pts[j]);
            Complex det(1.0, 0.0);
            for (int c = 0; c < n; ++c) {
                int piv = c;
                for (int r = c + 1; r < n; ++r)
                    if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
                if (piv != c) {
                    for (int cc = 0; cc < n; ++cc) std::swap(a[c * n + cc], a[piv * n + cc]);
                    det = -det;
                }
                det *= a[c * n + c];
                for (int r = c + 1; r < n; ++r) {
                    Complex fac = a[r * n + c] / a[c * n + c];
                    for (int cc = c; cc < n; ++cc) a[r * n + cc] -= fac * a[c * n + cc];
                }
            }
            worst = std::max(worst, std::abs(lhs - det.real()) / std::abs(det.real()));
        }
        ok = ok && worst <= 1e-9;
        detail += "slater " + fmt(worst) + "  ";
    }

    // cardinality + one-point chi-square at p=50 with 200 samples
    {
        ModelGeometry m = ModelGeometry::plane();
        const int p = 50, n_samples = 200, bins = 20, n_p = p + 1;
        auto cdf = [&](double r) {
            double lam = p * M_PI * r * r;
            Kahan<double> s;
            for (int k = 0; k < n_p; ++k) s.add(1.0 - poisson_cdf(k, lam));
            return s.value() / n_p;
        };
        std::vector<double> edges(bins - 1);
        for (int b = 1; b < bins; ++b) {
            double q = static_cast<double>(b) / bins, lo = 0.0, hi = truncation_radius(m, p);
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                (cdf(mid) < q ? lo : hi) = mid;
            }
            edges[b - 1] = 0.5 * (lo + hi);
        }
        std::vector<Configuration> samples(n_samples);
        parallel::parallel_for(n_samples, [&](std::size_t i) {
            Rng rng(161616, i);
            samples[i] = hkpv_sample(m, p, rng);
        });
        bool card = true;
        std::vector<long long> obs(bins, 0);
        for (const auto& s : samples) {
            card = card && static_cast<int>(s.points.size()) == n_p;
            for (const Point& x : s.points)
                ++obs[std::lower_bound(edges.begin(), edges.end(), std::abs(x.z)) - edges.begin()];
        }
        double expected = static_cast<double>(n_samples) * n_p / bins;
        double chi2 = 0;
        for (long long o : obs) chi2 += (o - expected) * (o - expected) / expected;
        ok = ok && card && chi2 < 36.1908691292701;
        detail += "cardinality " + std::string(card ? "ok" : "BROKEN") + ", chi2 " + fmt(chi2) + "  ";
    }

    // Kostlan cross-sampler agreement within 3 combined standard errors
    {
        ModelGeometry m = ModelGeometry::plane();
        const int p = 50, n = 400;
        TestFunction f = radial_bump(0.15, 0.45);
        std::vector<double> hk(n), ko(n);
        parallel::parallel_for(n, [&](std::size_t i) {
            Rng rng(272727, i);
            hk[i] = linear_statistic(f, hkpv_sample(m, p, rng));
        });
        parallel::parallel_for(n, [&](std::size_t i) {
            Rng rng(383838, i);
            double s = 0;
            for (double r : kostlan_radii_sample(p, rng)) s += f(Point{Complex(r, 0)});
            ko[i] = s;
        });
        auto mean_se = [&](const std::vector<double>& v) {
            double mn = 0;
            for (double x : v) mn += x;
            mn /= n;
            double s2 = 0;
            for (double x : v) s2 += (x - mn) * (x - mn);
            s2 /= (n - 1);
            return std::pair<double, double>{mn, std::sqrt(s2 / n)};
        };
        auto [m1, se1] = mean_se(hk);
        auto [m2, se2] = mean_se(ko);
        double gap = std::abs(m1 - m2), se = std::sqrt(se1 * se1 + se2 * se2);
        ok = ok && gap <= 3.0 * se;
        detail += "kostlan gap/se " + fmt(se > 0 ? gap / se : 0.0);
    }

    report(12, ok, "dpp structural suite: slater identity, cardinality, one-point law, kostlan",
           detail);
}

// --------------------------------------------------------------- criterion 13
void criterion_kernel_algebra() {
    bool ok = true;
    std::string detail;
    Rng rng(777111);
    for (int p : {10, 50}) {
        for (bool plane : {true, false}) {
            ModelGeometry m = plane ? ModelGeometry::plane() : ModelGeometry::projective_line(p);
            double herm = 0.0, wsum = 0.0;
            for (int t = 0; t < 25; ++t) {
                Point x{std::polar(rng.uniform(0.05, 0.9), rng.uniform(0.0, 2 * M_PI))};
                Point y{std::polar(rng.uniform(0.05, 0.9), rng.uniform(0.0, 2 * M_PI))};
                Complex a = partial_kernel(m, p, x, y);
                Complex b = std::conj(partial_kernel(m, p, y, x));
                herm = std::max(herm, std::abs(a - b) / (std::abs(a) + 1e-300));

                int shift = section_basis(m, p).shift;
                int k_max = m.is_plane() ? plane_degree_cutoff(p, x, y) : p;
                Kahan<Complex> sum;
                for (int k = 0; k <= k_max; ++k)
                    sum.add(equivariant_kernel(m, p, k - shift, x, y));
                Complex full = full_kernel(m, p, x, y);
                wsum = std::max(wsum, std::abs(sum.value() - full) / std::abs(full));
            }
            ok = ok && herm <= 1e-12 && wsum <= 1e-10;

            // positive semidefiniteness via diagonally-dominant Schur check:
            // smallest eigenvalue of an 8x8 kernel matrix via power iteration
            // on (c I - K)
            for (int rep = 0; rep < 4; ++rep) {
                int n = 8;
                std::vector<Point> pts(n);
                for (auto& q : pts)
                    q = Point{std::polar(rng.uniform(0.05, 0.9), rng.uniform(0.0, 2 * M_PI))};
                std::vector<Complex> a(n * n);
                double trace = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        a[i * n + j] = partial_kernel(m, p, pts[i], pts[j]);
                        if (i == j) trace += a[i * n + j].real();
                    }
                double c = 2.0 * trace + 1.0;
                std::vector<Complex> v(n);
                for (auto& z : v) z = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
                double lam = 0.0;
                for (int it = 0; it < 400; ++it) {
                    std::vector<Complex> w(n, Complex(0, 0));
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j) w[i] += (i == j ? c : 0.0) * v[j] - a[i * n + j] * v[j];
                    double nn = 0;
                    for (auto& z : w) nn += std::norm(z);
                    nn = std::sqrt(nn);
                    for (auto& z : w) z /= nn;
                    lam = nn;
                    v = std::move(w);
                }
                double min_eig = c - lam;
                ok = ok && min_eig >= -1e-8 * trace;
            }

            // reproducing property and trace at this p
            PlanarGrid grid = make_grid(m, p, 300, 128);
            Point x{Complex(0.21, 0.13)}, z{Complex(-0.17, 0.28)};
            for (bool use_partial : {false, true}) {
                auto K = [&](Point aa, Point bb) {
                    return use_partial ? partial_kernel(m, p, aa, bb) : full_kernel(m, p, aa, bb);
                };
                Complex conv = plane_integrate(
                    [&](Complex y) {
                        Point py{y};
                        return K(x, py) * K(py, z) * volume_density(m, py);
                    },
                    grid);
                ok = ok && std::abs(conv - K(x, z)) <= 1e-6 * std::abs(K(x, z));
            }
            double tr = plane_integrate(
                            [&](Complex zz) {
                                return Complex(partial_kernel_diag(m, p, {zz}) *
                                                   volume_density(m, {zz}),
                                               0.0);
                            },
                            grid)
                            .real();
            double n_p = section_basis(m, p).dimension();
            ok = ok && std::abs(tr - n_p) <= 1e-6 * n_p;
            if (p == 50) detail += std::string(plane ? "plane" : "sphere") + " herm " + fmt(herm) +
                                   " wsum " + fmt(wsum) + " tr-gap " + fmt(std::abs(tr - n_p)) + "  ";
        }
    }
    report(13, ok, "kernel algebra: hermitian, psd, reproducing, weight sum, trace at p in {10,50}",
           detail);
}

} // namespace

int main() {
    criterion_dimension();
    criterion_diagonal();
    criterion_erf_profile();
    criterion_equivariant_model();
    criterion_averaging_oracle();
    criterion_euler_maclaurin();
    criterion_forbidden_region();
    criterion_circular_law();
    criterion_bulk_variance();
    criterion_boundary_factor();
    criterion_clt_normality();
    criterion_dpp_structure();
    criterion_kernel_algebra();
    return g_failures == 0 ? 0 : 1;
}
