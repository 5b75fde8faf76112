#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "fieldest/model.hpp"

// Test-only numerics: quadrature, numeric Laplace-Stieltjes transforms,
// KS distances, and independent density oracles. Nothing here may call the
// closed-form paths it is used to check.
namespace support {

namespace detail {

inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double flm = f(0.5 * (a + m));
    const double frm = f(0.5 * (m + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) < 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson over an initial panel split, so narrow features away from
// the interval midpoint cannot be skipped by the first stencil.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int panels = 64) {
    double acc = 0.0;
    const double h = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        const double pa = a + i * h;
        const double pb = i + 1 == panels ? b : pa + h;
        const double pm = 0.5 * (pa + pb);
        acc += detail::simpson_rec(f, pa, pb, f(pa), f(pm), f(pb), tol / panels, 48);
    }
    return acc;
}

// Integral of a decaying integrand over [0, xmax] with geometrically graded
// panels (first panel [0, min_scale], then octave doubling), so short features
// near the origin survive even when xmax is many orders of magnitude larger.
inline double integrate_decaying(const std::function<double(double)>& f, double xmax,
                                 double min_scale, double tol = 1e-11) {
    double acc = 0.0;
    double lo = 0.0;
    double hi = std::min(min_scale, xmax);
    for (;;) {
        const double mid = 0.5 * (lo + hi);
        acc += detail::simpson_rec(f, lo, hi, f(lo), f(mid), f(hi), tol, 48);
        if (hi >= xmax) break;
        lo = hi;
        hi = std::min(2.0 * hi, xmax);
    }
    return acc;
}

// Numeric LST of a proper CDF F on [0, inf): s * int e^{-st} F(t) dt, with the
// exponential tail beyond tmax bounded by F ~ 1 there.
inline double lst_of_cdf(const std::function<double(double)>& cdf, double s, double tmax,
                         double tol = 1e-12) {
    const double body =
        s * integrate([&](double t) { return std::exp(-s * t) * cdf(t); }, 0.0, tmax, tol);
    return body + std::exp(-s * tmax);
}

// Kolmogorov-Smirnov distance between samples and a reference CDF.
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double v = cdf(samples[i]);
        d = std::max(d, std::abs(v - static_cast<double>(i + 1) / n));
        d = std::max(d, std::abs(v - static_cast<double>(i) / n));
    }
    return d;
}

// Stationary age density of the M/M/1 FCFS queue, by partial fractions of
// its transform: f(t) = q e^{-qt} - q[A e^{-lt} + (B + Ct) e^{-mt}],
// q = m - l, A = -lm/(m-l)^2, B = 1 - A, C = lm/(m-l).
inline double mm1_fcfs_age_density(double lambda, double mu, double t) {
    const double q = mu - lambda;
    const double a = -lambda * mu / (q * q);
    const double b = 1.0 - a;
    const double c = mu * lambda / q;
    return q * std::exp(-q * t) -
           q * (a * std::exp(-lambda * t) + (b + c * t) * std::exp(-mu * t));
}

// Age density of the freshest-packet (LCFS) point: sum of two exponentials.
inline double lcfs_age_density(double lambda, double mu, double t) {
    if (std::abs(lambda - mu) < 1e-12 * std::max(lambda, mu)) {
        return lambda * lambda * t * std::exp(-lambda * t);
    }
    return lambda * mu / (mu - lambda) * (std::exp(-lambda * t) - std::exp(-mu * t));
}

// F_K(x) by direct numeric convolution of the scaled-distance CDF with the
// a-scaled age density. Independent of every closed-form CDF in the library.
inline double combined_cdf_oracle(const fieldest::SystemConfig& config,
                                  const fieldest::CorrelationParams& corr, double x,
                                  double tol = 1e-12) {
    const double mu0 = config.mu_bar / config.lambda_s;
    const double r_d = 2.0 * config.lambda_s / corr.b;
    const auto age_density = [&](double t) {
        return config.discipline == fieldest::Discipline::Fcfs
                   ? mm1_fcfs_age_density(config.lambda_t, mu0, t)
                   : lcfs_age_density(config.lambda_t, mu0, t);
    };
    const auto f_h = [&](double u) { return age_density(u / corr.a) / corr.a; };
    const auto dist_cdf = [&](double y) { return -std::expm1(-r_d * y); };
    if (x <= 0.0) return 0.0;
    return integrate([&](double u) { return dist_cdf(x - u) * f_h(u); }, 0.0, x, tol);
}

}  // namespace support
