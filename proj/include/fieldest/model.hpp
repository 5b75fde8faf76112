#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace fieldest {

enum class Discipline { Fcfs, Lcfs };
enum class Scheduler { UniformRandom, RoundRobin };

inline const char* to_string(Discipline d) {
    return d == Discipline::Fcfs ? "fcfs" : "lcfs";
}
inline const char* to_string(Scheduler s) {
    return s == Scheduler::UniformRandom ? "ur" : "rr";
}

// Invalid or out-of-domain argument (non-positive rate, negative distance...).
struct invalid_parameter : std::domain_error {
    using std::domain_error::domain_error;
};

// FCFS configuration with rho0 >= 1; distinct from invalid_parameter because
// LCFS accepts any rho0.
struct unstable_queue : std::domain_error {
    using std::domain_error::domain_error;
};

// Repeated rates where a partial-fraction expansion requires distinct ones.
struct confluent_rates : std::domain_error {
    using std::domain_error::domain_error;
};

// Probe against an empty point set.
struct no_sampler : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) throw invalid_parameter(what);
}

inline bool positive_finite(double v) {
    return std::isfinite(v) && v > 0.0;
}

// Two rates count as equal below this relative separation; closed forms
// switch to their confluent branch there.
inline constexpr double kConfluenceTol = 1e-9;

inline bool rates_equal(double r1, double r2) {
    return std::abs(r1 - r2) <= kConfluenceTol * std::max(std::abs(r1), std::abs(r2));
}

}  // namespace detail

// Exponential correlation decay constants: time decay a [1/s], spatial
// decay b [1/m]. Units are fixed to seconds/meters project-wide.
struct CorrelationParams {
    double a;
    double b;

    CorrelationParams(double a_, double b_) : a(a_), b(b_) {
        detail::require(detail::positive_finite(a), "correlation: a must be positive and finite");
        detail::require(detail::positive_finite(b), "correlation: b must be positive and finite");
    }
};

// System configuration. mu_bar is the canonical service parameter (service
// rate normalized by region length); a raw (mu, L) pair is converted at
// construction via mu_bar = mu/L.
struct SystemConfig {
    double lambda_s;  // spatial sampling density [points/m]
    double lambda_t;  // per-point packet arrival rate [1/s]
    double mu_bar;    // normalized service rate [1/(s*m)]
    Discipline discipline = Discipline::Fcfs;
    Scheduler scheduler = Scheduler::UniformRandom;
    std::optional<double> region_length;  // [m], when known

    SystemConfig(double lambda_s_, double lambda_t_, double mu_bar_,
                 Discipline d = Discipline::Fcfs,
                 Scheduler sched = Scheduler::UniformRandom,
                 std::optional<double> region_length_ = std::nullopt)
        : lambda_s(lambda_s_), lambda_t(lambda_t_), mu_bar(mu_bar_),
          discipline(d), scheduler(sched), region_length(region_length_) {}

    static SystemConfig from_raw_mu(double lambda_s, double lambda_t, double mu,
                                    double region_length,
                                    Discipline d = Discipline::Fcfs,
                                    Scheduler sched = Scheduler::UniformRandom) {
        detail::require(detail::positive_finite(mu), "config: mu must be positive");
        detail::require(detail::positive_finite(region_length), "config: region length must be positive");
        return SystemConfig(lambda_s, lambda_t, mu / region_length, d, sched, region_length);
    }
};

// Quantities derived from a validated config.
struct DerivedRates {
    double mu0;   // per-point service rate mu_bar/lambda_s [1/s]
    double rho0;  // per-point load lambda_t/mu0
    std::optional<double> point_count;  // lambda_s * L, when L known
};

// Central validation: every downstream module assumes its config passed here.
inline DerivedRates validate(const SystemConfig& config) {
    detail::require(detail::positive_finite(config.lambda_s), "config: lambda_s must be positive and finite");
    detail::require(detail::positive_finite(config.lambda_t), "config: lambda_t must be positive and finite");
    detail::require(detail::positive_finite(config.mu_bar), "config: mu_bar must be positive and finite");
    if (config.region_length) {
        detail::require(detail::positive_finite(*config.region_length), "config: region length must be positive and finite");
    }
    DerivedRates out;
    out.mu0 = config.mu_bar / config.lambda_s;
    out.rho0 = config.lambda_t / out.mu0;
    if (config.region_length) out.point_count = config.lambda_s * *config.region_length;
    if (config.discipline == Discipline::Fcfs && out.rho0 >= 1.0) {
        throw unstable_queue("config: FCFS requires rho0 = lambda_t*lambda_s/mu_bar < 1 (got rho0 = " +
                             std::to_string(out.rho0) + ")");
    }
    return out;
}

// Correlation coefficient g(d, t) = exp(-b*d/2 - a*t/2).
inline double correlation(const CorrelationParams& params, double distance, double age) {
    detail::require(distance >= 0.0 && std::isfinite(distance), "correlation: distance must be >= 0");
    detail::require(age >= 0.0 && std::isfinite(age), "correlation: age must be >= 0");
    return std::exp(-0.5 * (params.b * distance + params.a * age));
}

// Instantaneous squared estimation error given distance to the nearest
// sampler and that sampler's information age: 1 - g^2 = 1 - exp(-b*d - a*t).
struct PointError {
    double value;  // in [0,1]
};

inline PointError instantaneous_error(const CorrelationParams& params, double distance, double age) {
    detail::require(distance >= 0.0 && std::isfinite(distance), "error: distance must be >= 0");
    detail::require(age >= 0.0 && std::isfinite(age), "error: age must be >= 0");
    return PointError{-std::expm1(-(params.b * distance + params.a * age))};
}

}  // namespace fieldest
