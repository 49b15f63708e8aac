#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "droplet/config.hpp"
#include "droplet/dpp.hpp"
#include "droplet/euler_maclaurin.hpp"
#include "droplet/kernels.hpp"
#include "droplet/statistics.hpp"
#include "droplet/version.hpp"

namespace droplet {

namespace detail {

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace detail

inline ModelGeometry model_for(const ExperimentConfig& cfg, int p) {
    if (cfg.model == "plane") return ModelGeometry::plane();
    return ModelGeometry::projective_line(p);
}

/// Fills family-default parameters scaled to the model's droplet.
inline TestFunction resolve_test_function(const ModelGeometry& model, const std::string& name,
                                          const std::vector<double>& params) {
    if (!params.empty()) return make_test_function(model, name, params);
    double r0 = boundary_base_point(model).z.real();
    if (name == "radial_bump") return radial_bump(0.25 * r0, 0.85 * r0);
    if (name == "angular_mode") return angular_mode(model, 1);
    if (name == "gaussian_bump") return gaussian_bump(0.0, 0.2 * r0);
    if (name == "constant_capped") return constant_capped(2.0 * r0);
    return make_test_function(model, name, params);
}

struct RunOutput {
    int exit_code = 0;
    std::vector<std::string> files;
    std::string manifest_path;
    std::string message;
};

namespace detail {

struct CsvBuilder {
    std::ostringstream out;
    explicit CsvBuilder(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
        out << "\n";
    }
    void row(const std::vector<std::string>& vals) {
        for (std::size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << vals[i];
        out << "\n";
    }
};

/// Normalized containment coordinate: the fraction r in [0,1] such that the
/// chart disk {pi|z|^2 <= r^2} (plane) or {t <= r^2 t0} (sphere) carries
/// droplet mass r^2.
inline double region_coordinate(const ModelGeometry& model, Point x) {
    if (model.is_plane()) return std::sqrt(M_PI) * std::abs(x.z);
    double t = std::norm(x.z) / (1.0 + std::norm(x.z));
    double t0 = static_cast<double>(model.weight_shift()) / model.power();
    return std::sqrt(t / t0);
}

inline std::string run_kernel_profile(const ExperimentConfig& cfg) {
    CsvBuilder csv({"p", "v", "model_value", "exact_value", "abs_error"});
    for (int p : cfg.p_list) {
        ModelGeometry model = model_for(cfg, p);
        double xi0 = fundamental_field_norm(model, boundary_base_point(model));
        double sp = std::sqrt(static_cast<double>(p));
        for (int i = -30; i <= 30; ++i) {
            double v = 0.1 * i;
            double mu = v / sp;
            Point x;
            if (model.is_plane()) {
                double r2 = (1.0 + mu) / M_PI;
                if (r2 <= 0.0) continue;
                x = Point{Complex(std::sqrt(r2), 0.0)};
            } else {
                double t0 = static_cast<double>(model.weight_shift()) / p;
                double t = t0 + mu;
                if (t <= 0.0 || t >= 1.0) continue;
                x = Point{Complex(std::sqrt(t / (1.0 - t)), 0.0)};
            }
            double exact = partial_kernel_diag(model, p, x) / p;
            double mod = std::sqrt(2.0) * gaussian_tail_integral(-v / xi0);
            csv.row({std::to_string(p), fmt(v), fmt(mod), fmt(exact), fmt(std::abs(mod - exact))});
        }
    }
    return csv.out.str();
}

inline std::string run_em_validation(const ExperimentConfig& cfg) {
    CsvBuilder csv({"p", "check", "a", "v", "k", "brute", "leading", "abs_error", "bound"});
    for (int p : cfg.p_list) {
        {
            double brute = em::gaussian_halfline_sum(1.0, 1.0, p);
            double lead = em::gaussian_halfline_leading(1.0, 1.0, p);
            csv.row({std::to_string(p), "em2", "1", "1", "0", fmt(brute), fmt(lead),
                     fmt(std::abs(brute - lead)), fmt(0.01 * std::abs(lead))});
        }
        for (double v : {0.0, 0.5, -0.5, 1.0, -1.0}) {
            for (int k = 1; k <= 5; ++k) {
                double brute = em::paired_gaussian_difference(v, 1.0, p, k);
                double lead = em::paired_gaussian_leading(v, k);
                double bound = 3.0 * k * k / std::sqrt(static_cast<double>(p));
                csv.row({std::to_string(p), "em4bis", "1", fmt(v), std::to_string(k), fmt(brute),
                         fmt(lead), fmt(std::abs(brute - lead)), fmt(bound)});
            }
        }
    }
    return csv.out.str();
}

inline std::string run_lln(const ExperimentConfig& cfg) {
    CsvBuilder csv({"p", "r", "mean_fraction", "limit_value", "abs_dev",
                    "deviation_probability", "epsilon"});
    const double eps = 0.05;
    const std::vector<double> rs = {0.5, 0.9};
    for (int p : cfg.p_list) {
        ModelGeometry model = model_for(cfg, p);
        int n = cfg.n_samples;
        std::vector<std::vector<double>> fracs(rs.size(), std::vector<double>(n, 0.0));
        parallel::parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
            Rng rng(cfg.master_seed, i);
            Configuration c = hkpv_sample(model, p, rng);
            for (std::size_t ri = 0; ri < rs.size(); ++ri) {
                int count = 0;
                for (const Point& x : c.points)
                    if (region_coordinate(model, x) <= rs[ri]) ++count;
                fracs[ri][i] = static_cast<double>(count) / c.points.size();
            }
        });
        for (std::size_t ri = 0; ri < rs.size(); ++ri) {
            double limit = std::min(rs[ri] * rs[ri], 1.0);
            Kahan<double> mean;
            int exceed = 0;
            for (double v : fracs[ri]) {
                mean.add(v);
                if (std::abs(v - limit) > eps) ++exceed;
            }
            double m = mean.value() / n;
            csv.row({std::to_string(p), fmt(rs[ri]), fmt(m), fmt(limit), fmt(std::abs(m - limit)),
                     fmt(static_cast<double>(exceed) / n), fmt(eps)});
        }
    }
    return csv.out.str();
}

inline std::string run_clt_variance(const ExperimentConfig& cfg,
                                    std::map<std::string, std::string>& manifest_extra) {
    CsvBuilder csv({"p", "n_samples", "exact_expectation", "exact_variance", "mc_mean",
                    "mc_variance", "mc_stderr", "limit_bulk", "limit_boundary_f1",
                    "limit_boundary_fhalf", "ks_stat", "ks_threshold"});
    std::vector<double> variances;
    double bulk = 0.0, mode_sum = 0.0;
    for (int p : cfg.p_list) {
        ModelGeometry model = model_for(cfg, p);
        TestFunction f = resolve_test_function(model, cfg.test_function, cfg.function_params);
        McOptions opt;
        opt.boundary_factor = cfg.boundary_factor;
        opt.n_radial = cfg.n_radial;
        opt.n_angular = cfg.n_angular;
        StatisticsReport rep = mc_run(model, p, f, cfg.n_samples, cfg.master_seed, opt);
        variances.push_back(rep.exact_variance);
        bulk = rep.limit_variance_bulk;
        mode_sum = rep.boundary_mode_sum;
        csv.row({std::to_string(p), std::to_string(rep.n_samples), fmt(rep.exact_expectation),
                 fmt(rep.exact_variance), fmt(rep.mc_mean), fmt(rep.mc_variance),
                 fmt(rep.mc_stderr), fmt(rep.limit_variance_bulk), fmt(1.0 * rep.boundary_mode_sum),
                 fmt(0.5 * rep.boundary_mode_sum),
                 rep.has_ks ? fmt(rep.ks_statistic) : std::string("nan"),
                 rep.has_ks ? fmt(rep.ks_threshold) : std::string("nan")});
    }
    if (variances.size() >= 3 && mode_sum > 0.0) {
        // least-squares extrapolation V(p) = V_inf + c p^{-1/2}
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < variances.size(); ++i) {
            double x = 1.0 / std::sqrt(static_cast<double>(cfg.p_list[i]));
            sx += x; sy += variances[i]; sxx += x * x; sxy += x * variances[i];
        }
        double n = static_cast<double>(variances.size());
        double slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
        double vinf = (sy - slope * sx) / n;
        double best = 1.0, best_err = std::abs(vinf - (bulk + 1.0 * mode_sum));
        double err_half = std::abs(vinf - (bulk + 0.5 * mode_sum));
        if (err_half < best_err) { best = 0.5; best_err = err_half; }
        manifest_extra["variance_extrapolated"] = fmt(vinf);
        manifest_extra["boundary_factor_measured"] = fmt(best);
    }
    return csv.out.str();
}

inline std::string run_sampler_diagnostics(const ExperimentConfig& cfg) {
    CsvBuilder csv({"p", "n_samples", "chi_square", "chi_square_critical", "cardinality_ok",
                    "kostlan_gap", "kostlan_se", "slater_identity_err"});
    const double chi2_crit_19 = 36.1908691292701;  // 1% upper quantile, 19 dof
    for (int p : cfg.p_list) {
        ModelGeometry model = model_for(cfg, p);
        int n = cfg.n_samples;
        int n_p = section_basis(model, p).dimension();
        std::vector<Configuration> samples(n);
        parallel::parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
            Rng rng(cfg.master_seed, i);
            samples[i] = hkpv_sample(model, p, rng);
        });
        bool card_ok = true;
        for (const auto& s : samples) card_ok = card_ok && static_cast<int>(s.points.size()) == n_p;

        // one-point density chi-square over 20 equal-mass radial bins
        const int bins = 20;
        std::vector<double> edges(bins - 1);
        {
            // bin edges from the exact radial CDF by bisection
            auto cdf = [&](double r) {
                // integral of rho1 over the disk of radius r, over N_p
                if (model.is_plane()) {
                    double lam = p * M_PI * r * r;
                    Kahan<double> s;
                    for (int k = 0; k < n_p; ++k) s.add(1.0 - poisson_cdf(k, lam));
                    return s.value() / n_p;
                }
                double t = r * r / (1.0 + r * r);
                Kahan<double> s;
                for (int k = 0; k < n_p; ++k)
                    s.add(1.0 - binomial_cdf(k, p + 1, t));
                return s.value() / n_p;
            };
            double rmax = truncation_radius(model, p);
            for (int b = 1; b < bins; ++b) {
                double q = static_cast<double>(b) / bins, lo = 0.0, hi = rmax;
                for (int it = 0; it < 80; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (cdf(mid) < q ? lo : hi) = mid;
                }
                edges[b - 1] = 0.5 * (lo + hi);
            }
        }
        std::vector<long long> observed(bins, 0);
        for (const auto& s : samples)
            for (const Point& x : s.points) {
                double r = std::abs(x.z);
                int b = static_cast<int>(std::lower_bound(edges.begin(), edges.end(), r) - edges.begin());
                ++observed[b];
            }
        double expected = static_cast<double>(n) * n_p / bins;
        double chi2 = 0.0;
        for (long long o : observed) chi2 += (o - expected) * (o - expected) / expected;

        // Kostlan cross-sampler check on a radial bump (plane only)
        double gap = 0.0, se = 0.0;
        if (model.is_plane()) {
            TestFunction f = resolve_test_function(model, "radial_bump", {});
            std::vector<double> hk(n), ko(n);
            for (int i = 0; i < n; ++i) hk[i] = linear_statistic(f, samples[i]);
            parallel::parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
                Rng rng(cfg.master_seed ^ 0x9e3779b97f4a7c15ULL, i);
                double s = 0.0;
                for (double r : kostlan_radii_sample(p, rng)) s += f(Point{Complex(r, 0.0)});
                ko[i] = s;
            });
            auto mean_se = [n](const std::vector<double>& v) {
                double m = 0;
                for (double x : v) m += x;
                m /= n;
                double s2 = 0;
                for (double x : v) s2 += (x - m) * (x - m);
                s2 /= (n - 1);
                return std::pair<double, double>(m, std::sqrt(s2 / n));
            };
            auto [m1, se1] = mean_se(hk);
            auto [m2, se2] = mean_se(ko);
            gap = std::abs(m1 - m2);
            se = std::sqrt(se1 * se1 + se2 * se2);
        }

        // Slater determinant identity at small rank
        double slater_err = std::nan("");
        if (n_p <= 6) {
            Rng rng(cfg.master_seed, 12345);
            double worst = 0.0;
            for (int rep = 0; rep < 5; ++rep) {
                std::vector<Point> pts(n_p);
                double r0 = boundary_base_point(model).z.real();
                for (auto& x : pts) x = Point{std::polar(rng.uniform(0.05, 1.2) * r0, rng.uniform(0.0, 2.0 * M_PI))};
                double lhs = std::exp(slater_log_density(model, p, pts) + std::lgamma(n_p + 1.0));
                std::vector<Complex> gram(n_p * n_p);
                for (int i = 0; i < n_p; ++i)
                    for (int j = 0; j < n_p; ++j)
                        gram[i * n_p + j] = partial_kernel(model, p, pts[i], pts[j]);
                // LU determinant of the Hermitian kernel matrix
                Complex det(1.0, 0.0);
                std::vector<Complex> a = gram;
                for (int c = 0; c < n_p; ++c) {
                    int piv = c;
                    for (int r2 = c + 1; r2 < n_p; ++r2)
                        if (std::abs(a[r2 * n_p + c]) > std::abs(a[piv * n_p + c])) piv = r2;
                    if (piv != c) {
                        for (int cc = 0; cc < n_p; ++cc) std::swap(a[c * n_p + cc], a[piv * n_p + cc]);
                        det = -det;
                    }
                    Complex d = a[c * n_p + c];
                    det *= d;
                    for (int r2 = c + 1; r2 < n_p; ++r2) {
                        Complex fct = a[r2 * n_p + c] / d;
                        for (int cc = c; cc < n_p; ++cc) a[r2 * n_p + cc] -= fct * a[c * n_p + cc];
                    }
                }
                double det_re = det.real();
                worst = std::max(worst, std::abs(lhs - det_re) / std::max(std::abs(det_re), 1e-300));
            }
            slater_err = worst;
        }

        csv.row({std::to_string(p), std::to_string(n), fmt(chi2), fmt(chi2_crit_19),
                 card_ok ? "1" : "0", fmt(gap), fmt(se), fmt(slater_err)});
    }
    return csv.out.str();
}

} // namespace detail

/// Executes a validated config: writes one CSV per experiment kind and a
/// manifest echoing the config with content digests. Returns exit code 0 on
/// success, 2 on runtime failure (partial outputs are suffixed .failed).
inline RunOutput run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    RunOutput out;
    std::map<std::string, std::string> manifest_extra;
    std::string csv;
    auto t0 = std::chrono::steady_clock::now();
    try {
        fs::create_directories(cfg.output_dir);
        switch (cfg.kind) {
            case ExperimentKind::KernelProfile: csv = detail::run_kernel_profile(cfg); break;
            case ExperimentKind::EmValidation: csv = detail::run_em_validation(cfg); break;
            case ExperimentKind::Lln: csv = detail::run_lln(cfg); break;
            case ExperimentKind::CltVariance: csv = detail::run_clt_variance(cfg, manifest_extra); break;
            case ExperimentKind::SamplerDiagnostics: csv = detail::run_sampler_diagnostics(cfg); break;
        }
    } catch (const std::exception& e) {
        out.exit_code = 2;
        out.message = e.what();
        std::ofstream marker(fs::path(cfg.output_dir) /
                             (std::string(kind_name(cfg.kind)) + ".csv.failed"));
        marker << e.what() << "\n";
        return out;
    }
    auto t1 = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    std::string csv_name = std::string(kind_name(cfg.kind)) + ".csv";
    fs::path csv_path = fs::path(cfg.output_dir) / csv_name;
    {
        std::ofstream f(csv_path, std::ios::binary);
        f << csv;
    }
    out.files.push_back(csv_path.string());

    std::ostringstream man;
    man << "artifact_version = " << kVersion << "\n";
    man << "rng_algorithm = " << kRngAlgorithm << "\n";
    std::istringstream echo(render_config(cfg));
    std::string line;
    while (std::getline(echo, line)) man << "config." << line << "\n";
    man << "task." << kind_name(cfg.kind) << ".ms = " << detail::fmt(ms) << "\n";
    for (const auto& [k, v] : manifest_extra) man << k << " = " << v << "\n";
    man << "digest." << csv_name << " = fnv1a64:" << detail::hex64(detail::fnv1a64(csv)) << "\n";

    fs::path man_path = fs::path(cfg.output_dir) / "manifest.txt";
    {
        std::ofstream f(man_path, std::ios::binary);
        f << man.str();
    }
    out.manifest_path = man_path.string();
    return out;
}

} // namespace droplet
