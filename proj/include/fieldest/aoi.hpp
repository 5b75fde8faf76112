#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "fieldest/model.hpp"

namespace fieldest {

namespace detail {

// phi1(u) = expm1(u)/u, phi1(0) = 1. Exact through the confluent limit.
inline double phi1(double u) {
    if (u == 0.0) return 1.0;
    return std::expm1(u) / u;
}

// phi2(u) = (expm1(u) - u)/u^2, phi2(0) = 1/2. Series below |u| = 0.05 keeps
// full precision where the direct form cancels.
inline double phi2(double u) {
    if (std::abs(u) < 0.05) {
        // sum_{k>=0} u^k/(k+2)!
        double term = 0.5;
        double acc = term;
        for (int k = 1; k <= 9; ++k) {
            term *= u / (k + 2);
            acc += term;
        }
        return acc;
    }
    return (std::expm1(u) - u) / (u * u);
}

inline double pow_int(double x, int n) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= x;
    return v;
}

}  // namespace detail

// CDF of the sum of two independent exponentials (rates lambda1, lambda2),
// with the repeated-rate branch below the confluence tolerance.
inline double hypo2_cdf(double lambda1, double lambda2, double x) {
    detail::require(detail::positive_finite(lambda1), "hypo2_cdf: lambda1 must be positive");
    detail::require(detail::positive_finite(lambda2), "hypo2_cdf: lambda2 must be positive");
    detail::require(x >= 0.0, "hypo2_cdf: x must be >= 0");
    if (detail::rates_equal(lambda1, lambda2)) {
        return 1.0 - (1.0 + lambda1 * x) * std::exp(-lambda1 * x);
    }
    // 1 - (l2 e^{-l1 x} - l1 e^{-l2 x})/(l2 - l1), refactored through phi1 so
    // it stays accurate arbitrarily close to the switch.
    const double delta = lambda2 - lambda1;
    return 1.0 - std::exp(-lambda1 * x) * (1.0 + lambda1 * x * detail::phi1(-delta * x));
}

// Finite mixture F(t) = 1 + sum_i coef_i * t^degree_i * exp(-rate_i t).
struct ExpMixtureCdf {
    struct Term {
        double coef;
        int degree;
        double rate;
    };
    std::vector<Term> terms;

    double operator()(double t) const {
        detail::require(t >= 0.0, "ExpMixtureCdf: t must be >= 0");
        double v = 1.0;
        for (const auto& term : terms) {
            v += term.coef * detail::pow_int(t, term.degree) * std::exp(-term.rate * t);
        }
        return v;
    }
};

// Mixture form of the hypoexponential CDF for up to three rates, with
// repeated rates (within the confluence tolerance) handled by the
// higher-multiplicity expansion.
inline ExpMixtureCdf hypoexp_mixture(std::span<const double> rates) {
    detail::require(!rates.empty() && rates.size() <= 3, "hypoexp_mixture: 1..3 rates supported");
    for (double r : rates) detail::require(detail::positive_finite(r), "hypoexp_mixture: rates must be positive");

    std::vector<double> sorted(rates.begin(), rates.end());
    std::sort(sorted.begin(), sorted.end());
    // Group confluent rates; each group uses its mean rate.
    std::vector<std::pair<double, int>> groups;  // (rate, multiplicity)
    for (double r : sorted) {
        if (!groups.empty() && detail::rates_equal(groups.back().first, r)) {
            auto& [gr, gm] = groups.back();
            gr = (gr * gm + r) / (gm + 1);
            gm += 1;
        } else {
            groups.emplace_back(r, 1);
        }
    }

    ExpMixtureCdf out;
    if (groups.size() == 1) {
        const auto [r, m] = groups.front();
        // Erlang(m, r): 1 - e^{-rt} sum_{k<m} (rt)^k/k!
        double fact = 1.0;
        for (int k = 0; k < m; ++k) {
            if (k > 0) fact *= k;
            out.terms.push_back({-detail::pow_int(r, k) / fact, k, r});
        }
        return out;
    }
    if (groups.size() == static_cast<std::size_t>(sorted.size())) {
        // All distinct: F = 1 - sum_i w_i e^{-r_i t}, w_i = prod_{j!=i} r_j/(r_j - r_i).
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            double w = 1.0;
            for (std::size_t j = 0; j < sorted.size(); ++j) {
                if (j != i) w *= sorted[j] / (sorted[j] - sorted[i]);
            }
            out.terms.push_back({-w, 0, sorted[i]});
        }
        return out;
    }
    // One double rate r and one simple rate c (three rates total).
    const double r = groups[0].second == 2 ? groups[0].first : groups[1].first;
    const double c = groups[0].second == 2 ? groups[1].first : groups[0].first;
    const double gap = c - r;
    out.terms.push_back({r * c / (gap * gap) - c / gap, 0, r});
    out.terms.push_back({-r * c / gap, 1, r});
    out.terms.push_back({-(r * r) / (gap * gap), 0, c});
    return out;
}

// --- FCFS, uniformly random scheduling -------------------------------------

// Stationary AoI LST for a per-point M/M/1 FCFS queue (arrival rate lambda_t,
// service rate mu0), valid for rho0 = lambda_t/mu0 < 1.
inline double fcfs_ur_lst(double lambda_t, double mu0, double s) {
    detail::require(detail::positive_finite(lambda_t), "fcfs_ur_lst: lambda_t must be positive");
    detail::require(detail::positive_finite(mu0), "fcfs_ur_lst: mu0 must be positive");
    const double rho0 = lambda_t / mu0;
    if (rho0 >= 1.0) throw unstable_queue("fcfs_ur_lst: requires rho0 < 1");
    const double q = (1.0 - rho0) * mu0;
    detail::require(s > -0.5 * std::min(q, lambda_t), "fcfs_ur_lst: s outside the analyticity region");
    return q / (s + q) -
           q * s * (s + lambda_t + mu0) / ((s + mu0) * (s + mu0) * (s + lambda_t));
}

// Stationary AoI CDF matching fcfs_ur_lst (its exact inverse transform):
//   F(t) = 1 - e^{-(1-rho0) mu0 t} + (1/(1-rho0) + rho0 mu0 t) e^{-mu0 t}
//          - (1/(1-rho0)) e^{-lambda_t t},
// evaluated through phi1 so the 1/(1-rho0) pair stays stable as rho0 -> 1.
inline double fcfs_ur_cdf(double lambda_t, double mu0, double t) {
    detail::require(detail::positive_finite(lambda_t), "fcfs_ur_cdf: lambda_t must be positive");
    detail::require(detail::positive_finite(mu0), "fcfs_ur_cdf: mu0 must be positive");
    detail::require(t >= 0.0, "fcfs_ur_cdf: t must be >= 0");
    const double rho0 = lambda_t / mu0;
    if (rho0 >= 1.0) throw unstable_queue("fcfs_ur_cdf: requires rho0 < 1");
    const double q = (1.0 - rho0) * mu0;
    return 1.0 - std::exp(-q * t) + rho0 * mu0 * t * std::exp(-mu0 * t) -
           mu0 * t * std::exp(-lambda_t * t) * detail::phi1(-q * t);
}

inline ExpMixtureCdf fcfs_ur_mixture(double lambda_t, double mu0) {
    const double rho0 = lambda_t / mu0;
    if (rho0 >= 1.0) throw unstable_queue("fcfs_ur_mixture: requires rho0 < 1");
    const double c = 1.0 / (1.0 - rho0);
    ExpMixtureCdf out;
    out.terms.push_back({-1.0, 0, (1.0 - rho0) * mu0});
    out.terms.push_back({c, 0, mu0});
    out.terms.push_back({rho0 * mu0, 1, mu0});
    out.terms.push_back({-c, 0, lambda_t});
    return out;
}

// Mean stationary AoI of the M/M/1 FCFS queue.
inline double fcfs_ur_mean(double lambda_t, double mu0) {
    const double rho0 = lambda_t / mu0;
    if (rho0 >= 1.0) throw unstable_queue("fcfs_ur_mean: requires rho0 < 1");
    return (1.0 + 1.0 / rho0 + rho0 * rho0 / (1.0 - rho0)) / mu0;
}

// --- LCFS (freshest-packet), uniformly random scheduling -------------------

// The AoI is hypoexponential(lambda_t, mu0); any rho0 is admissible.
inline double lcfs_ur_lst(double lambda_t, double mu0, double s) {
    detail::require(detail::positive_finite(lambda_t), "lcfs_ur_lst: lambda_t must be positive");
    detail::require(detail::positive_finite(mu0), "lcfs_ur_lst: mu0 must be positive");
    detail::require(s > -0.5 * std::min(lambda_t, mu0), "lcfs_ur_lst: s outside the analyticity region");
    return (lambda_t / (s + lambda_t)) * (mu0 / (s + mu0));
}

// CDF derived from the LST (the hypoexponential convolution), not the
// printed mixture, whose e^{-mu0 x} coefficient disagrees with the LST.
inline double lcfs_ur_cdf(double lambda_t, double mu0, double t) {
    return hypo2_cdf(lambda_t, mu0, t);
}

inline ExpMixtureCdf lcfs_ur_mixture(double lambda_t, double mu0) {
    const double rates[] = {lambda_t, mu0};
    return hypoexp_mixture(rates);
}

inline double lcfs_ur_mean(double lambda_t, double mu0) {
    return 1.0 / lambda_t + 1.0 / mu0;
}

// --- FCFS, round-robin scheduling -------------------------------------------

// Stationary AoI LST with per-point Erlang service, q(s) = (mu/(s+mu))^M.
// Evaluated through log1p/expm1 so
// the removable singularity at s = 0 is benign; below 1e-8*lambda_t the
// denominator switches to its one-term series.
inline double fcfs_rr_lst(double lambda_t, double mu, int point_count, double s) {
    detail::require(detail::positive_finite(lambda_t), "fcfs_rr_lst: lambda_t must be positive");
    detail::require(detail::positive_finite(mu), "fcfs_rr_lst: mu must be positive");
    detail::require(point_count >= 1, "fcfs_rr_lst: point count must be >= 1");
    const double m = static_cast<double>(point_count);
    const double rho0 = lambda_t * m / mu;
    if (rho0 >= 1.0) throw unstable_queue("fcfs_rr_lst: requires lambda_t < mu/M");
    detail::require(s > -0.5 * std::min(lambda_t, mu / m), "fcfs_rr_lst: s outside the analyticity region");

    const auto q = [&](double z) { return std::exp(-m * std::log1p(z / mu)); };
    const double qs = q(s);
    double w;
    if (std::abs(s) < 1e-8 * lambda_t) {
        const double den_over_s = (1.0 - rho0) + s * lambda_t * m * (m + 1.0) / (2.0 * mu * mu);
        w = (1.0 - rho0) * qs / den_over_s;
    } else {
        const double den = s + lambda_t * std::expm1(-m * std::log1p(s / mu));
        w = (1.0 - rho0) * s * qs / den;
    }
    const double second = (1.0 - rho0) * s * qs / (s + lambda_t * q(s + lambda_t));
    return w - second;
}

// --- Moments ----------------------------------------------------------------

// First moment from an LST evaluator: Richardson-extrapolated central
// differences at 0. The evaluator must be finite on a small interval around 0.
template <typename Lst>
double mean_from_lst(Lst&& lst) {
    const auto eval = [&](double s) {
        const double v = lst(s);
        detail::require(std::isfinite(v), "mean_from_lst: LST evaluated to a non-finite value");
        return v;
    };
    // Locate the scale: h with 1 - L(h) in [1e-4, 1e-1].
    double h = 1.0;
    double drop = 1.0 - eval(h);
    int guard = 0;
    while (drop > 1e-1 && guard++ < 200) {
        h *= 0.25;
        drop = 1.0 - eval(h);
    }
    while (drop < 1e-4 && guard++ < 200) {
        h *= 4.0;
        drop = 1.0 - eval(h);
    }
    detail::require(drop > 0.0, "mean_from_lst: LST does not decrease near 0");
    const double h0 = 0.05 * h / drop;  // ~0.05 / mean estimate

    constexpr int kLevels = 8;
    double row[kLevels];
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < kLevels; ++k) {
        const double hk = h0 / static_cast<double>(1 << k);
        double value = (eval(-hk) - eval(hk)) / (2.0 * hk);
        double pow4 = 1.0;
        for (int j = 0; j < k; ++j) {
            pow4 *= 4.0;
            const double tmp = value + (value - row[j]) / (pow4 - 1.0);
            row[j] = value;
            value = tmp;
        }
        row[k] = value;
        if (k > 0 && std::abs(value - prev) <= 1e-9 * std::max(1.0, std::abs(value))) {
            return value;
        }
        prev = value;
    }
    return prev;
}

// --- Law object --------------------------------------------------------------

// A stationary AoI law: closed-form CDF (where available) plus LST evaluator.
class AoiLaw {
  public:
    enum class Kind { FcfsUr, LcfsUr, FcfsRr };

    static AoiLaw fcfs_ur(double lambda_t, double mu0) {
        detail::require(detail::positive_finite(lambda_t) && detail::positive_finite(mu0),
                        "AoiLaw: rates must be positive");
        if (lambda_t >= mu0) throw unstable_queue("AoiLaw: FCFS requires rho0 < 1");
        return AoiLaw(Kind::FcfsUr, lambda_t, mu0, 1);
    }
    static AoiLaw lcfs_ur(double lambda_t, double mu0) {
        detail::require(detail::positive_finite(lambda_t) && detail::positive_finite(mu0),
                        "AoiLaw: rates must be positive");
        return AoiLaw(Kind::LcfsUr, lambda_t, mu0, 1);
    }
    static AoiLaw fcfs_rr(double lambda_t, double mu, int point_count) {
        detail::require(detail::positive_finite(lambda_t) && detail::positive_finite(mu),
                        "AoiLaw: rates must be positive");
        detail::require(point_count >= 1, "AoiLaw: point count must be >= 1");
        if (lambda_t * point_count >= mu) throw unstable_queue("AoiLaw: RR requires lambda_t < mu/M");
        return AoiLaw(Kind::FcfsRr, lambda_t, mu, point_count);
    }

    Kind kind() const { return kind_; }
    double lambda_t() const { return lambda_t_; }
    // Per-point service rate (mu/M for round-robin).
    double mu0() const { return mu_ / point_count_; }
    int point_count() const { return point_count_; }

    double lst(double s) const {
        switch (kind_) {
            case Kind::FcfsUr: return fcfs_ur_lst(lambda_t_, mu_, s);
            case Kind::LcfsUr: return lcfs_ur_lst(lambda_t_, mu_, s);
            case Kind::FcfsRr: return fcfs_rr_lst(lambda_t_, mu_, point_count_, s);
        }
        return 0.0;
    }

    double cdf(double t) const {
        switch (kind_) {
            case Kind::FcfsUr: return fcfs_ur_cdf(lambda_t_, mu_, t);
            case Kind::LcfsUr: return lcfs_ur_cdf(lambda_t_, mu_, t);
            case Kind::FcfsRr: break;
        }
        throw invalid_parameter("AoiLaw: no closed-form CDF for round-robin; use the LST");
    }

    ExpMixtureCdf mixture() const {
        switch (kind_) {
            case Kind::FcfsUr: return fcfs_ur_mixture(lambda_t_, mu_);
            case Kind::LcfsUr: return lcfs_ur_mixture(lambda_t_, mu_);
            case Kind::FcfsRr: break;
        }
        throw invalid_parameter("AoiLaw: no mixture form for round-robin");
    }

    double mean() const {
        switch (kind_) {
            case Kind::FcfsUr: return fcfs_ur_mean(lambda_t_, mu_);
            case Kind::LcfsUr: return lcfs_ur_mean(lambda_t_, mu_);
            case Kind::FcfsRr: return mean_from_lst([this](double s) { return lst(s); });
        }
        return 0.0;
    }

  private:
    AoiLaw(Kind kind, double lambda_t, double mu, int point_count)
        : kind_(kind), lambda_t_(lambda_t), mu_(mu), point_count_(point_count) {}

    Kind kind_;
    double lambda_t_;
    double mu_;        // mu0 for UR kinds, channel mu for RR
    int point_count_;  // 1 for UR kinds
};

}  // namespace fieldest
