#pragma once

#include <cmath>
#include <optional>

#include "fieldest/aoi.hpp"
#include "fieldest/model.hpp"
#include "fieldest/spatial.hpp"

namespace fieldest {

namespace detail {

// F(x) = x/(x+1), the factor every closed-form error expression is built of.
inline double rate_factor(double x) { return x / (x + 1.0); }

// phi1'(u), for divided differences of phi1 across nearly-equal arguments.
inline double phi1_prime(double u) {
    if (std::abs(u) < 0.05) {
        // sum_{k>=1} k u^{k-1}/(k+1)!
        return 0.5 + u / 3.0 + u * u / 8.0 + u * u * u / 30.0 + u * u * u * u / 144.0;
    }
    return (std::exp(u) * (u - 1.0) + 1.0) / (u * u);
}

inline double phi1_divided_difference(double u, double v) {
    const double scale = std::max({1.0, std::abs(u), std::abs(v)});
    if (std::abs(u - v) <= 1e-6 * scale) return phi1_prime(0.5 * (u + v));
    return (phi1(u) - phi1(v)) / (u - v);
}

}  // namespace detail

// Dimensionless rates of the combined variable K = b*d_min + a*Delta.
// r_q = r_mu - r_lambda is the stability gap; it is positive exactly for
// stable FCFS configurations and carries no meaning for LCFS.
struct CombinedRates {
    double r_d;       // 2*lambda_s/b
    double r_lambda;  // lambda_t/a
    double r_mu;      // mu0/a
    double r_q;       // (1-rho0)*mu0/a
};

inline CombinedRates combined_rates(const SystemConfig& config, const CorrelationParams& corr) {
    const DerivedRates d = validate(config);
    CombinedRates r;
    r.r_d = 2.0 * config.lambda_s / corr.b;
    r.r_lambda = config.lambda_t / corr.a;
    r.r_mu = d.mu0 / corr.a;
    r.r_q = r.r_mu - r.r_lambda;
    return r;
}

// Law of K = D + H for a validated configuration: LST as the product of the
// independent parts, CDF in closed form.
class CombinedLaw {
  public:
    CombinedLaw(const SystemConfig& config, const CorrelationParams& corr)
        : discipline_(config.discipline),
          a_(corr.a),
          lambda_t_(config.lambda_t),
          mu0_(validate(config).mu0),
          rates_(combined_rates(config, corr)) {
        if (discipline_ == Discipline::Lcfs) {
            const double rs[] = {rates_.r_d, rates_.r_lambda, rates_.r_mu};
            lcfs_mixture_ = hypoexp_mixture(rs);
        }
    }

    Discipline discipline() const { return discipline_; }
    const CombinedRates& rates() const { return rates_; }

    double lst(double s) const {
        const double d_part = rates_.r_d / (s + rates_.r_d);
        const double aoi_part = discipline_ == Discipline::Fcfs
                                    ? fcfs_ur_lst(lambda_t_, mu0_, a_ * s)
                                    : lcfs_ur_lst(lambda_t_, mu0_, a_ * s);
        return d_part * aoi_part;
    }

    double cdf(double x) const {
        detail::require(x >= 0.0 && !std::isnan(x), "CombinedLaw::cdf: x must be >= 0");
        if (discipline_ == Discipline::Lcfs) return (*lcfs_mixture_)(x);

        // The FCFS closed form: two-rate convolution terms plus the
        // double-pole block, each group evaluated through expm1-based forms
        // so confluent rates are exact limits rather than 0/0.
        const auto [r_d, r_lam, r_mu, r_q] = rates_;
        const double group1 = hypo2_cdf(r_d, r_q, x);
        // (1/(1-rho0)) * (H_{r_d,r_lam} - H_{r_d,r_mu}) as a divided difference.
        const double u_mu = -(r_mu - r_d) * x;
        const double u_lam = -(r_lam - r_d) * x;
        const double group2 = -std::exp(-r_d * x) * r_d * r_mu * x * x *
                              detail::phi1_divided_difference(u_mu, u_lam);
        const double group3 = r_lam * r_d * x * x * std::exp(-r_mu * x) *
                              detail::phi2((r_mu - r_d) * x);
        return group1 + group2 + group3;
    }

  private:
    Discipline discipline_;
    double a_;
    double lambda_t_;
    double mu0_;
    CombinedRates rates_;
    std::optional<ExpMixtureCdf> lcfs_mixture_;
};

inline double combined_cdf(const SystemConfig& config, const CorrelationParams& corr, double x) {
    return CombinedLaw(config, corr).cdf(x);
}

// Error-space CDF: F_xi(z) = F_K(-log(1-z)) on [0,1].
inline double error_cdf_z(const SystemConfig& config, const CorrelationParams& corr, double z) {
    detail::require(z >= 0.0 && z <= 1.0, "error_cdf_z: z must be in [0,1]");
    if (z >= 1.0) return 1.0;
    return combined_cdf(config, corr, -std::log1p(-z));
}

// Coefficients of the FCFS error density in z. Defined only when the four
// rates are pairwise distinct beyond the confluence tolerance; confluent
// configurations should integrate combined_cdf numerically instead.
struct PdfCoefficients {
    double alpha;
    double beta;
    double gamma;
    double omega;
    double kappa;
    CombinedRates rates;

    double density(double z) const {
        detail::require(z >= 0.0 && z < 1.0, "PdfCoefficients::density: z must be in [0,1)");
        const double one_m = 1.0 - z;
        return alpha * std::pow(one_m, rates.r_d - 1.0) +
               beta * std::pow(one_m, rates.r_lambda - 1.0) +
               gamma * std::pow(one_m, rates.r_mu - 1.0) +
               omega * std::log(one_m) * std::pow(one_m, rates.r_mu - 1.0) +
               kappa * std::pow(one_m, rates.r_q - 1.0);
    }
};

inline PdfCoefficients pdf_coefficients(const SystemConfig& config, const CorrelationParams& corr) {
    detail::require(config.discipline == Discipline::Fcfs, "pdf_coefficients: FCFS only");
    const CombinedRates r = combined_rates(config, corr);
    const double all[] = {r.r_d, r.r_lambda, r.r_mu, r.r_q};
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            if (detail::rates_equal(all[i], all[j])) {
                throw confluent_rates(
                    "pdf_coefficients: repeated rates; integrate combined_cdf by quadrature instead");
            }
        }
    }
    const double c = r.r_mu / r.r_q;  // 1/(1-rho0)
    PdfCoefficients out;
    out.rates = r;
    out.kappa = -r.r_d * r.r_q / (r.r_q - r.r_d);
    out.beta = -c * r.r_d * r.r_lambda / (r.r_lambda - r.r_d);
    out.omega = -r.r_lambda * r.r_d * r.r_mu / (r.r_mu - r.r_d);
    out.gamma = c * r.r_d * r.r_mu / (r.r_mu - r.r_d) +
                r.r_lambda * r.r_d * r.r_d / ((r.r_mu - r.r_d) * (r.r_mu - r.r_d));
    out.alpha = r.r_q * r.r_d / (r.r_q - r.r_d) +
                c * (r.r_lambda * r.r_d / (r.r_lambda - r.r_d) -
                     r.r_mu * r.r_d / (r.r_mu - r.r_d)) -
                r.r_lambda * r.r_d * r.r_d / ((r.r_mu - r.r_d) * (r.r_mu - r.r_d));
    return out;
}

enum class ErrorMethod { ProductForm, PartialFraction, LstAtOne, Quadrature };

inline const char* to_string(ErrorMethod m) {
    switch (m) {
        case ErrorMethod::ProductForm: return "product_form";
        case ErrorMethod::PartialFraction: return "partial_fraction";
        case ErrorMethod::LstAtOne: return "lst_at_one";
        case ErrorMethod::Quadrature: return "quadrature";
    }
    return "?";
}

// Time- and space-averaged estimation error with the independent LST-at-1
// estimate recorded alongside; a gap beyond round-off is a diagnostic for
// the caller, never averaged away.
struct ErrorSummary {
    double eps_bar;
    ErrorMethod method;
    Discipline discipline;
    CombinedRates rates;
    double cross_check;      // 1 - LST_K(1) (or the product form for LCFS)
    double consistency_gap;  // |eps_bar - cross_check|
};

// eps = 1 - E[e^{-K}] = 1 - LST_K(1); valid for both disciplines and free of
// partial-fraction singularities. Serves as the independent analytic oracle.
inline ErrorSummary eps_via_lst_at_one(const SystemConfig& config, const CorrelationParams& corr) {
    const CombinedLaw law(config, corr);
    ErrorSummary out;
    out.eps_bar = 1.0 - law.lst(1.0);
    out.method = ErrorMethod::LstAtOne;
    out.discipline = config.discipline;
    out.rates = law.rates();
    out.cross_check = out.eps_bar;
    out.consistency_gap = 0.0;
    return out;
}

// Closed-form FCFS error:
//   eps = 1 - F(r_d) F(r_lambda) F(r_q) [1 + r_lambda/(r_mu+1)^2].
inline ErrorSummary eps_fcfs(const SystemConfig& config, const CorrelationParams& corr) {
    detail::require(config.discipline == Discipline::Fcfs, "eps_fcfs: FCFS config required");
    const CombinedLaw law(config, corr);
    const auto& r = law.rates();
    ErrorSummary out;
    out.method = ErrorMethod::ProductForm;
    out.discipline = Discipline::Fcfs;
    out.rates = r;
    using detail::rate_factor;
    out.eps_bar = 1.0 - rate_factor(r.r_d) * rate_factor(r.r_lambda) * rate_factor(r.r_q) *
                            (1.0 + r.r_lambda / ((r.r_mu + 1.0) * (r.r_mu + 1.0)));
    out.cross_check = 1.0 - law.lst(1.0);
    out.consistency_gap = std::abs(out.eps_bar - out.cross_check);
    return out;
}

// Closed-form LCFS error in partial-fraction form,
//   eps = eta/(r_d+1) + nu/(r_lambda+1) + upsilon/(r_mu+1),
// falling back to 1 - LST_K(1) when the three rates are not distinct.
inline ErrorSummary eps_lcfs(const SystemConfig& config, const CorrelationParams& corr) {
    detail::require(config.discipline == Discipline::Lcfs, "eps_lcfs: LCFS config required");
    const CombinedLaw law(config, corr);
    const auto& r = law.rates();
    ErrorSummary out;
    out.discipline = Discipline::Lcfs;
    out.rates = r;
    using detail::rate_factor;
    out.cross_check =
        1.0 - rate_factor(r.r_d) * rate_factor(r.r_lambda) * rate_factor(r.r_mu);
    const bool distinct = !detail::rates_equal(r.r_d, r.r_lambda) &&
                          !detail::rates_equal(r.r_d, r.r_mu) &&
                          !detail::rates_equal(r.r_lambda, r.r_mu);
    if (distinct) {
        const double eta = r.r_lambda * r.r_mu /
                           ((r.r_d - r.r_lambda) * (r.r_d - r.r_mu));
        const double nu = r.r_d * r.r_mu /
                          ((r.r_lambda - r.r_d) * (r.r_lambda - r.r_mu));
        const double upsilon = r.r_d * r.r_lambda /
                               ((r.r_mu - r.r_d) * (r.r_mu - r.r_lambda));
        out.method = ErrorMethod::PartialFraction;
        out.eps_bar = eta / (r.r_d + 1.0) + nu / (r.r_lambda + 1.0) + upsilon / (r.r_mu + 1.0);
    } else {
        out.method = ErrorMethod::LstAtOne;
        out.eps_bar = 1.0 - law.lst(1.0);
    }
    out.consistency_gap = std::abs(out.eps_bar - out.cross_check);
    return out;
}

// Dispatch on the config's discipline.
inline ErrorSummary eps_analytic(const SystemConfig& config, const CorrelationParams& corr) {
    return config.discipline == Discipline::Fcfs ? eps_fcfs(config, corr)
                                                 : eps_lcfs(config, corr);
}

}  // namespace fieldest
