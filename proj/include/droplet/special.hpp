#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace droplet {

/// Neumaier-compensated accumulator.
template <typename T>
class Kahan {
public:
    void add(T x) {
        T t = sum_ + x;
        if constexpr (std::is_floating_point_v<T>) {
            comp_ += (std::abs(sum_) >= std::abs(x)) ? (sum_ - t) + x : (x - t) + sum_;
        } else {
            comp_ += (std::norm(sum_) >= std::norm(x)) ? (sum_ - t) + x : (x - t) + sum_;
        }
        sum_ = t;
    }
    T value() const { return sum_ + comp_; }

private:
    T sum_{};
    T comp_{};
};

inline double log_binomial(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// P(Poisson(lambda) <= n), which equals the regularized upper incomplete
/// gamma Q(n+1, lambda). Sums the probability window nearest the answer so
/// both tails come out with full relative accuracy.
inline double poisson_cdf(long long n, double lambda) {
    if (n < 0) return 0.0;
    if (lambda <= 0.0) return 1.0;
    auto log_pmf = [lambda](long long k) {
        return static_cast<double>(k) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0);
    };
    if (static_cast<double>(n) >= lambda) {
        // complement of the upper tail; terms decay going up from n+1
        Kahan<double> tail;
        double t = std::exp(log_pmf(n + 1));
        for (long long k = n + 1; t > 0.0; ++k) {
            tail.add(t);
            double next = t * lambda / static_cast<double>(k + 1);
            if (next < tail.value() * 1e-18 && k > n + 4) break;
            t = next;
        }
        return 1.0 - tail.value();
    }
    // lower sum; terms decay going down from n
    Kahan<double> acc;
    double t = std::exp(log_pmf(n));
    for (long long k = n; k >= 0 && t > 0.0; --k) {
        acc.add(t);
        double next = t * static_cast<double>(k) / lambda;
        if (next < acc.value() * 1e-18) break;
        t = next;
    }
    return acc.value();
}

/// P(Binomial(n, t) <= s).
inline double binomial_cdf(long long s, long long n, double t) {
    if (s < 0) return 0.0;
    if (s >= n) return 1.0;
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    double lt = std::log(t), l1t = std::log1p(-t);
    auto log_pmf = [=](long long k) {
        double kd = static_cast<double>(k), nd = static_cast<double>(n);
        return log_binomial(nd, kd) + kd * lt + (nd - kd) * l1t;
    };
    double mean = static_cast<double>(n) * t;
    if (static_cast<double>(s) >= mean) {
        Kahan<double> tail;
        double lp = log_pmf(s + 1);
        double term = std::exp(lp);
        for (long long k = s + 1; k <= n && term > 0.0; ++k) {
            tail.add(term);
            // pmf(k+1)/pmf(k) = (n-k)/(k+1) * t/(1-t)
            double ratio = (static_cast<double>(n - k) / static_cast<double>(k + 1)) * (t / (1.0 - t));
            double next = term * ratio;
            if (next < tail.value() * 1e-18 && k > s + 4) break;
            term = next;
        }
        return 1.0 - tail.value();
    }
    Kahan<double> acc;
    double term = std::exp(log_pmf(s));
    for (long long k = s; k >= 0 && term > 0.0; --k) {
        acc.add(term);
        double ratio = (static_cast<double>(k) / static_cast<double>(n - k + 1)) * ((1.0 - t) / t);
        double next = term * ratio;
        if (next < acc.value() * 1e-18) break;
        term = next;
    }
    return acc.value();
}

/// int_{-inf}^{v} e^{-2 pi t^2} dt  =  erfc(-sqrt(2 pi) v) / (2 sqrt 2).
inline double gaussian_tail_integral(double v) {
    static const double sqrt2pi = std::sqrt(2.0 * M_PI);
    return std::erfc(-sqrt2pi * v) / (2.0 * std::sqrt(2.0));
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace droplet
