#include <catch2/catch.hpp>

#include <cmath>

#include "fieldest/error.hpp"
#include "fieldest/rng.hpp"
#include "support.hpp"

using namespace fieldest;

namespace {

SystemConfig random_config(rng::Stream& stream, Discipline d) {
    const auto draw = [&](double lo, double hi) {
        return lo * std::exp(stream.next_unit() * std::log(hi / lo));
    };
    const double lambda_s = draw(0.1, 10.0);
    const double lambda_t = draw(0.1, 10.0);
    const double rho0 = d == Discipline::Fcfs ? 0.05 + 0.9 * stream.next_unit()
                                              : draw(0.05, 5.0);
    const double mu_bar = lambda_s * lambda_t / rho0;
    return SystemConfig(lambda_s, lambda_t, mu_bar, d);
}

CorrelationParams random_corr(rng::Stream& stream) {
    const auto draw = [&](double lo, double hi) {
        return lo * std::exp(stream.next_unit() * std::log(hi / lo));
    };
    return CorrelationParams(draw(0.1, 10.0), draw(0.1, 10.0));
}

}  // namespace

TEST_CASE("combined law rates and lst product structure", "[error]") {
    const CorrelationParams corr(0.5, 2.0);
    const SystemConfig cfg(1.0, 0.4, 2.0, Discipline::Fcfs);
    const CombinedLaw law(cfg, corr);
    const auto& r = law.rates();
    CHECK(r.r_d == Approx(2.0 * 1.0 / 2.0));
    CHECK(r.r_lambda == Approx(0.4 / 0.5));
    CHECK(r.r_mu == Approx(2.0 / 0.5));
    CHECK(r.r_q == Approx(r.r_mu - r.r_lambda));
    for (double s : {0.2, 1.0, 3.0}) {
        const double product = distance_lst(cfg.lambda_s, corr.b, s) *
                               fcfs_ur_lst(cfg.lambda_t, 2.0, corr.a * s);
        CHECK(law.lst(s) == Approx(product).epsilon(1e-12));
    }
    CHECK(law.lst(0.0) == Approx(1.0));
}

TEST_CASE("combined cdf starts at zero and reaches one", "[error]") {
    const CorrelationParams corr(1.0, 1.0);
    CHECK(combined_cdf(SystemConfig(1.0, 2.0, 8.0, Discipline::Fcfs), corr, 0.0) ==
          Approx(0.0).margin(1e-14));
    // rates r_d=3, r_lambda=1, r_mu=4/3
    const SystemConfig lcfs(1.5, 1.0, 2.0, Discipline::Lcfs);
    CHECK(combined_cdf(lcfs, corr, 0.0) == Approx(0.0).margin(1e-14));
    CHECK(combined_cdf(lcfs, corr, 1e6) == Approx(1.0).margin(1e-12));
    CHECK_THROWS_AS(combined_cdf(SystemConfig(1.0, 2.0, 1.0, Discipline::Fcfs), corr, 1.0),
                    unstable_queue);
}

TEST_CASE("combined cdf matches the convolution oracle", "[error]") {
    const CorrelationParams corr(1.0, 1.0);
    // spec reference config: the r_d = r_lambda collision exercises the
    // confluent branch of the closed form
    const SystemConfig confluent(1.0, 2.0, 8.0, Discipline::Fcfs);
    CHECK(combined_cdf(confluent, corr, 1.0) ==
          Approx(support::combined_cdf_oracle(confluent, corr, 1.0)).margin(1e-6));

    const SystemConfig distinct(1.25, 2.0, 10.0, Discipline::Fcfs);
    const SystemConfig lcfs(1.5, 1.0, 2.0, Discipline::Lcfs);
    for (double x : {0.1, 0.5, 1.0, 2.5, 6.0}) {
        CHECK(combined_cdf(distinct, corr, x) ==
              Approx(support::combined_cdf_oracle(distinct, corr, x)).margin(1e-8));
        CHECK(combined_cdf(confluent, corr, x) ==
              Approx(support::combined_cdf_oracle(confluent, corr, x)).margin(1e-8));
        CHECK(combined_cdf(lcfs, corr, x) ==
              Approx(support::combined_cdf_oracle(lcfs, corr, x)).margin(1e-8));
    }
    // anisotropic units
    const CorrelationParams corr2(0.25, 3.0);
    const SystemConfig cfg2(0.8, 0.3, 0.6, Discipline::Fcfs);
    for (double x : {0.2, 1.0, 4.0}) {
        CHECK(combined_cdf(cfg2, corr2, x) ==
              Approx(support::combined_cdf_oracle(cfg2, corr2, x)).margin(1e-8));
    }
}

TEST_CASE("combined cdf is monotone", "[error]") {
    const CorrelationParams corr(1.0, 1.0);
    for (const auto& cfg : {SystemConfig(1.25, 2.0, 10.0, Discipline::Fcfs),
                            SystemConfig(1.5, 1.0, 2.0, Discipline::Lcfs)}) {
        const CombinedLaw law(cfg, corr);
        double prev = 0.0;
        for (int i = 0; i <= 500; ++i) {
            const double v = law.cdf(0.02 * i);
            CHECK(v >= prev - 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("error cdf in z is the log substitution of the combined cdf", "[error]") {
    const CorrelationParams corr(1.0, 1.0);
    const SystemConfig cfg(1.0, 2.0, 8.0, Discipline::Fcfs);
    CHECK(error_cdf_z(cfg, corr, 0.0) == Approx(0.0).margin(1e-14));
    CHECK(error_cdf_z(cfg, corr, 1.0) == 1.0);
    CHECK(error_cdf_z(cfg, corr, 0.5) ==
          Approx(combined_cdf(cfg, corr, std::log(2.0))).epsilon(1e-12));
    CHECK_THROWS_AS(error_cdf_z(cfg, corr, -0.1), invalid_parameter);
    CHECK_THROWS_AS(error_cdf_z(cfg, corr, 1.1), invalid_parameter);
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double v = error_cdf_z(cfg, corr, i / 200.0);
        CHECK(v >= prev - 1e-12);
        CHECK(v <= 1.0 + 1e-12);
        prev = v;
    }
}

TEST_CASE("pdf coefficients integrate to one with mean eps", "[error]") {
    const CorrelationParams corr(1.0, 1.0);
    // rates 2.5, 2, 8, 6: pairwise distinct
    const SystemConfig cfg(1.25, 2.0, 10.0, Discipline::Fcfs);
    const auto pc = pdf_coefficients(cfg, corr);
    // substitute z = 1 - e^{-x}: each (1-z)^{r-1} dz term becomes e^{-rx} dx,
    // which stays evaluable far beyond the resolution of 1-z near z = 1
    const auto f_x = [&](double x) {
        const auto& r = pc.rates;
        return pc.alpha * std::exp(-r.r_d * x) + pc.beta * std::exp(-r.r_lambda * x) +
               pc.gamma * std::exp(-r.r_mu * x) - pc.omega * x * std::exp(-r.r_mu * x) +
               pc.kappa * std::exp(-r.r_q * x);
    };
    // the substituted integrand agrees with the density wherever z < 1 resolves
    for (double x : {0.05, 0.4, 1.0, 3.0, 11.0}) {
        CHECK(f_x(x) == Approx(pc.density(-std::expm1(-x)) * std::exp(-x)).margin(1e-12));
    }
    const double xmax = 60.0 / std::min({pc.rates.r_d, pc.rates.r_lambda, pc.rates.r_q});
    const double total = support::integrate_decaying(f_x, xmax, 0.01);
    const double mean = support::integrate_decaying(
        [&](double x) { return -std::expm1(-x) * f_x(x); }, xmax, 0.01);
    CHECK(total == Approx(1.0).margin(1e-6));
    CHECK(mean == Approx(eps_fcfs(cfg, corr).eps_bar).margin(1e-6));
    // density non-negative up to round-off
    for (int i = 0; i < 400; ++i) {
        CHECK(pc.density(i / 400.0) >= -1e-9);
    }
}

TEST_CASE("pdf coefficients reject rate collisions", "[error]") {
    const CorrelationParams corr(1.0, 1.0);
    // rates {2, 2, 4, 2}
    CHECK_THROWS_AS(pdf_coefficients(SystemConfig(1.0, 2.0, 4.0, Discipline::Fcfs), corr),
                    confluent_rates);
    // rates {2, 2, 8, 6}: the r_d = r_lambda collision alone is disqualifying
    CHECK_THROWS_AS(pdf_coefficients(SystemConfig(1.0, 2.0, 8.0, Discipline::Fcfs), corr),
                    confluent_rates);
    CHECK_THROWS_AS(pdf_coefficients(SystemConfig(1.0, 2.0, 8.0, Discipline::Lcfs), corr),
                    invalid_parameter);
}

TEST_CASE("closed-form fcfs error values", "[error]") {
    const CorrelationParams corr(1.0, 1.0);
    const auto s1 = eps_fcfs(SystemConfig(1.0, 2.0, 4.0, Discipline::Fcfs), corr);
    CHECK(s1.eps_bar == Approx(17.0 / 25.0).epsilon(1e-14));
    CHECK(s1.consistency_gap <= 1e-12);
    CHECK(s1.method == ErrorMethod::ProductForm);

    const auto s2 = eps_fcfs(SystemConfig(1.0, 2.0, 8.0, Discipline::Fcfs), corr);
    CHECK(s2.eps_bar == Approx(3111.0 / 5103.0).epsilon(1e-14));

    // lambda_t -> 0 forces eps -> 1
    const auto s3 = eps_fcfs(SystemConfig(1.0, 1e-12, 4.0, Discipline::Fcfs), corr);
    CHECK(s3.eps_bar >= 1.0 - 1e-9);
    CHECK_THROWS_AS(eps_fcfs(SystemConfig(1.0, 2.0, 1.0, Discipline::Fcfs), corr),
                    unstable_queue);
    CHECK_THROWS_AS(eps_fcfs(SystemConfig(1.0, 2.0, 4.0, Discipline::Lcfs), corr),
                    invalid_parameter);
}

TEST_CASE("closed-form lcfs error values", "[error]") {
    const CorrelationParams corr(1.0, 1.0);
    const auto s1 = eps_lcfs(SystemConfig(1.5, 1.0, 2.0, Discipline::Lcfs), corr);
    CHECK(s1.eps_bar == Approx(11.0 / 14.0).epsilon(1e-14));
    CHECK(s1.consistency_gap <= 1e-12);
    CHECK(s1.method == ErrorMethod::PartialFraction);

    // lambda_t -> infinity approaches 1 - F(2 lambda_s/b) F(mu0/a)
    const auto big = eps_lcfs(SystemConfig(1.0, 1e10, 2.0, Discipline::Lcfs), corr);
    CHECK(big.eps_bar == Approx(5.0 / 9.0).margin(1e-9));
    const auto tiny = eps_lcfs(SystemConfig(1.0, 1e-12, 2.0, Discipline::Lcfs), corr);
    CHECK(tiny.eps_bar >= 1.0 - 1e-9);

    // confluent rates fall back to the lst-at-one identity
    const auto conf = eps_lcfs(SystemConfig(0.5, 1.0, 1.0, Discipline::Lcfs), corr);
    CHECK(conf.method == ErrorMethod::LstAtOne);
    CHECK(conf.eps_bar == Approx(conf.cross_check).margin(1e-14));
}

TEST_CASE("lst-at-one estimate matches both closed forms", "[error]") {
    const CorrelationParams corr(1.0, 1.0);
    const SystemConfig f(1.0, 2.0, 4.0, Discipline::Fcfs);
    CHECK(eps_via_lst_at_one(f, corr).eps_bar == Approx(eps_fcfs(f, corr).eps_bar).margin(1e-12));
    const SystemConfig l(1.5, 1.0, 2.0, Discipline::Lcfs);
    CHECK(eps_via_lst_at_one(l, corr).eps_bar == Approx(eps_lcfs(l, corr).eps_bar).margin(1e-12));
    // near-perfect correlation: K collapses to zero
    const CorrelationParams flat(1e-12, 1e-12);
    CHECK(eps_via_lst_at_one(l, flat).eps_bar == Approx(0.0).margin(1e-9));
}

TEST_CASE("analytic identity on random stable configs", "[error]") {
    rng::Stream stream(rng::mix64(2024));
    for (int i = 0; i < 200; ++i) {
        const auto corr = random_corr(stream);
        const auto fcfs = random_config(stream, Discipline::Fcfs);
        const auto sf = eps_fcfs(fcfs, corr);
        CHECK(std::abs(sf.eps_bar - sf.cross_check) <= 1e-9);
        CHECK(sf.eps_bar > 0.0);
        CHECK(sf.eps_bar < 1.0);
        const auto lcfs = random_config(stream, Discipline::Lcfs);
        const auto sl = eps_lcfs(lcfs, corr);
        CHECK(std::abs(sl.eps_bar - sl.cross_check) <= 1e-10);
        CHECK(sl.eps_bar > 0.0);
        CHECK(sl.eps_bar < 1.0);
    }
}

TEST_CASE("fcfs error rises to one at the load boundaries", "[error]") {
    const CorrelationParams corr(1.0, 1.0);
    // rho0 -> 1
    const auto near_boundary = eps_fcfs(SystemConfig(1.0, 4.0 * (1.0 - 1e-6), 4.0,
                                                     Discipline::Fcfs), corr);
    CHECK(near_boundary.eps_bar >= 0.999);
    // interior minimum strictly below both boundaries on a lambda_t slice
    double best = 1.0;
    for (int i = 1; i < 40; ++i) {
        const double lt = 4.0 * i / 40.0;
        best = std::min(best, eps_fcfs(SystemConfig(1.0, lt, 4.0, Discipline::Fcfs), corr).eps_bar);
    }
    CHECK(best < near_boundary.eps_bar);
    CHECK(best < eps_fcfs(SystemConfig(1.0, 1e-7, 4.0, Discipline::Fcfs), corr).eps_bar);
}

TEST_CASE("lcfs error decreases in the sampling rate", "[error]") {
    const CorrelationParams corr(1.0, 1.0);
    double prev = 1.0;
    for (int i = 1; i <= 60; ++i) {
        const double lt = std::pow(10.0, -2.0 + 4.0 * i / 60.0);
        const double eps = eps_lcfs(SystemConfig(1.0, lt, 2.0, Discipline::Lcfs), corr).eps_bar;
        CHECK(eps < prev);
        prev = eps;
    }
}
