#include <catch2/catch.hpp>

#include <cmath>

#include "fieldest/aoi.hpp"
#include "fieldest/error.hpp"
#include "fieldest/sim.hpp"

using namespace fieldest;

TEST_CASE("segment integrals are exact on a delivery-free run", "[sim]") {
    AoiSimParams p;
    p.discipline = Discipline::Fcfs;
    p.lambda_t = 1e-9;  // no arrival within the horizon, almost surely
    p.mu = 1.0;
    p.point_count = 1;
    p.horizon = 10.0;
    p.warmup = 0.0;
    p.lst_s = {0.5, 2.0};
    p.seed = 5;
    const auto stats = simulate_aoi(p);
    REQUIRE(stats.points.size() == 1);
    CHECK(stats.total_deliveries == 0);
    // age grows linearly from 0: mean = h/2, lst = (1 - e^{-sh})/(sh)
    CHECK(stats.points[0].mean() == Approx(5.0).epsilon(1e-12));
    CHECK(stats.points[0].second_moment() == Approx(100.0 / 3.0).epsilon(1e-12));
    CHECK(stats.points[0].lst(0) == Approx(-std::expm1(-0.5 * 10.0) / (0.5 * 10.0)).epsilon(1e-12));
    CHECK(stats.points[0].lst(1) == Approx(-std::expm1(-2.0 * 10.0) / (2.0 * 10.0)).epsilon(1e-12));
    REQUIRE(!stats.warnings.empty());
}

TEST_CASE("simulation is deterministic in the seed", "[sim]") {
    AoiSimParams p;
    p.lambda_t = 0.5;
    p.mu = 1.0;
    p.point_count = 3;
    p.horizon = 1e4;
    p.warmup = 10.0;
    p.lst_s = {1.0};
    p.seed = 77;
    const auto a = simulate_aoi(p);
    const auto b = simulate_aoi(p);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].aoi_area == b.points[i].aoi_area);
        CHECK(a.points[i].lst_area[0] == b.points[i].lst_area[0]);
        CHECK(a.points[i].deliveries == b.points[i].deliveries);
    }
    p.seed = 78;
    const auto c = simulate_aoi(p);
    CHECK(a.points[0].aoi_area != c.points[0].aoi_area);
}

TEST_CASE("fcfs single queue reproduces the stationary aoi law", "[sim]") {
    AoiSimParams p;
    p.discipline = Discipline::Fcfs;
    p.lambda_t = 0.5;
    p.mu = 1.0;
    p.point_count = 1;
    p.horizon = 1e6;
    p.warmup = 100.0;
    p.lst_s = {0.5, 1.0, 2.0};
    p.seed = 42;
    const auto stats = simulate_aoi(p);
    CHECK(stats.pooled_mean() == Approx(3.5).epsilon(0.02));
    for (std::size_t i = 0; i < p.lst_s.size(); ++i) {
        CHECK(stats.pooled_lst(i) ==
              Approx(fcfs_ur_lst(0.5, 1.0, p.lst_s[i])).margin(0.004));
    }
    // number in system for M/M/1 at rho = 1/2
    CHECK(stats.pooled_mean_in_system() == Approx(1.0).epsilon(0.05));
}

TEST_CASE("lcfs freshest-packet queue reproduces the hypoexponential law", "[sim]") {
    AoiSimParams p;
    p.discipline = Discipline::Lcfs;
    p.lambda_t = 1.0;
    p.mu = 1.0;
    p.point_count = 1;
    p.horizon = 1e6;
    p.warmup = 100.0;
    p.lst_s = {0.5, 1.0, 2.0};
    p.seed = 42;
    const auto stats = simulate_aoi(p);
    CHECK(stats.pooled_mean() == Approx(2.0).epsilon(0.02));
    for (std::size_t i = 0; i < p.lst_s.size(); ++i) {
        CHECK(stats.pooled_lst(i) ==
              Approx(lcfs_ur_lst(1.0, 1.0, p.lst_s[i])).margin(0.004));
    }
    // overloaded LCFS is fine: mean -> 1/lambda_t + 1/mu0
    p.lambda_t = 5.0;
    p.horizon = 2e5;
    const auto hot = simulate_aoi(p);
    CHECK(hot.pooled_mean() == Approx(1.0 / 5.0 + 1.0).epsilon(0.03));
}

TEST_CASE("decoupled mode matches the per-point law", "[sim]") {
    AoiSimParams p;
    p.mode = ChannelMode::Decoupled;
    p.discipline = Discipline::Fcfs;
    p.lambda_t = 0.5;
    p.mu = 4.0;
    p.point_count = 4;  // mu0 = 1
    p.horizon = 5e5;
    p.warmup = 100.0;
    p.lst_s = {1.0};
    p.seed = 9;
    const auto stats = simulate_aoi(p);
    CHECK(stats.pooled_mean() == Approx(3.5).epsilon(0.02));
    CHECK(stats.pooled_mean_in_system() == Approx(1.0).epsilon(0.05));
}

TEST_CASE("round robin with one point is the single fcfs queue", "[sim]") {
    AoiSimParams p;
    p.scheduler = Scheduler::RoundRobin;
    p.lambda_t = 0.5;
    p.mu = 1.0;
    p.point_count = 1;
    p.horizon = 5e5;
    p.warmup = 100.0;
    p.lst_s = {1.0};
    p.seed = 4;
    const auto rr = simulate_aoi(p);
    CHECK(rr.pooled_mean() == Approx(3.5).epsilon(0.02));
    CHECK(rr.pooled_lst(0) == Approx(fcfs_ur_lst(0.5, 1.0, 1.0)).margin(0.005));
}

TEST_CASE("round robin empirical lst tracks the transform evaluator", "[sim]") {
    // the evaluator describes the per-point M/GI/1 abstraction with a fresh
    // Erlang(M, mu) service per head-of-line packet, i.e. Decoupled mode
    AoiSimParams p;
    p.scheduler = Scheduler::RoundRobin;
    p.mode = ChannelMode::Decoupled;
    p.lambda_t = 0.1;
    p.mu = 4.0;
    p.point_count = 4;
    p.horizon = 1e6;
    p.warmup = 200.0;
    p.lst_s = {0.5, 1.0, 2.0};
    p.seed = 21;
    const auto stats = simulate_aoi(p);
    for (std::size_t i = 0; i < p.lst_s.size(); ++i) {
        CHECK(stats.pooled_lst(i) ==
              Approx(fcfs_rr_lst(0.1, 4.0, 4, p.lst_s[i])).margin(0.003));
    }
    CHECK(stats.pooled_mean() ==
          Approx(mean_from_lst([](double s) { return fcfs_rr_lst(0.1, 4.0, 4, s); }))
              .epsilon(0.02));

    // the shared token channel serves idle arrivals within the residual
    // cycle, so it runs strictly fresher at low load
    AoiSimParams ch = p;
    ch.mode = ChannelMode::ChannelLevel;
    const auto channel = simulate_aoi(ch);
    CHECK(channel.pooled_mean() < stats.pooled_mean());
}

TEST_CASE("channel and decoupled modes are statistically equivalent", "[sim]") {
    EquivalenceParams p;
    p.scheduler = Scheduler::UniformRandom;
    p.lambda_t = 0.1;
    p.mu = 4.0;
    p.point_count = 4;
    p.horizon = 1e5;
    p.replications = 8;
    p.seed = 2;
    const auto report = equivalence_check(p);
    REQUIRE(report.rows.size() == 4);
    for (const auto& row : report.rows) {
        INFO(row.stat << " diff=" << row.diff << " ci=" << row.ci95);
        CHECK(row.pass);
    }
    CHECK(report.passed);

    // M = 1: both modes are the same process in law
    p.point_count = 1;
    p.mu = 1.0;
    p.lambda_t = 0.5;
    const auto trivial = equivalence_check(p);
    CHECK(trivial.passed);
    CHECK_THROWS_AS(equivalence_check([] {
                        EquivalenceParams q;
                        q.lambda_t = 2.0;
                        q.mu = 4.0;
                        q.point_count = 4;  // rho0 = 2
                        return q;
                    }()),
                    invalid_parameter);
}

TEST_CASE("field error estimate approaches the closed form", "[sim]") {
    FieldSimParams fp{SystemConfig(1.0, 2.0, 4.0, Discipline::Fcfs), CorrelationParams(1.0, 1.0)};
    fp.region_length = 50.0;
    fp.probes = 400;
    fp.horizon = 5000.0;
    fp.replications = 6;
    fp.seed = 3;
    const auto res = simulate_field_error(fp);
    CHECK(res.eps_hat == Approx(0.68).margin(0.03));
    CHECK(res.eps_hat >= 0.0);
    CHECK(res.eps_hat <= 1.0);
    CHECK(res.eps_ci95 > 0.0);
    CHECK(res.replications == 6);
    CHECK(res.manifest.algorithm == std::string("splitmix64-counter"));
    CHECK(res.manifest.seed == 3);
    CHECK(res.per_replication.size() == 6);

    // doubling the warmup moves the estimate by less than the CI half-width
    FieldSimParams fp2 = fp;
    fp2.warmup = 2.0 * res.warmup;
    const auto res2 = simulate_field_error(fp2);
    CHECK(std::abs(res2.eps_hat - res.eps_hat) <= std::max(res.eps_ci95, res2.eps_ci95));
}

TEST_CASE("field simulation is deterministic across thread counts", "[sim]") {
    FieldSimParams fp{SystemConfig(1.5, 1.0, 2.0, Discipline::Lcfs), CorrelationParams(1.0, 1.0)};
    fp.region_length = 40.0;
    fp.probes = 200;
    fp.horizon = 2000.0;
    fp.replications = 4;
    fp.seed = 11;
    fp.threads = 1;
    const auto a = simulate_field_error(fp);
    fp.threads = 3;
    const auto b = simulate_field_error(fp);
    CHECK(a.eps_hat == b.eps_hat);
    CHECK(a.eps_ci95 == b.eps_ci95);
    for (int r = 0; r < fp.replications; ++r) {
        CHECK(a.per_replication[r].eps == b.per_replication[r].eps);
    }
}

TEST_CASE("zero-horizon limit reduces to the spatial error", "[sim]") {
    FieldSimParams fp{SystemConfig(1.0, 2.0, 4.0, Discipline::Fcfs), CorrelationParams(1.0, 1.0)};
    fp.region_length = 500.0;
    fp.probes = 500;
    fp.horizon = 1e-3;
    fp.warmup = 0.0;
    fp.replications = 20;
    fp.seed = 8;
    const auto res = simulate_field_error(fp);
    // ages stay ~0, so only 1 - E[e^{-b d_min}] = 1 - F(2 lambda_s / b) remains
    CHECK(res.eps_hat == Approx(1.0 / 3.0).margin(0.02));
}

TEST_CASE("empty point sets are redrawn and counted", "[sim]") {
    FieldSimParams fp{SystemConfig(0.1, 1.0, 0.5, Discipline::Lcfs), CorrelationParams(1.0, 1.0)};
    fp.region_length = 5.0;  // Poisson mean 0.5: empties are common
    fp.probes = 10;
    fp.horizon = 100.0;
    fp.warmup = 0.0;
    fp.replications = 10;
    fp.seed = 6;
    const auto res = simulate_field_error(fp);
    CHECK(res.manifest.empty_redraws > 0);
    for (const auto& rep : res.per_replication) CHECK(rep.point_count >= 1);
    REQUIRE(!res.warnings.empty());  // lambda_s * L < 10
}

TEST_CASE("simulation parameter validation", "[sim]") {
    AoiSimParams p;
    p.lambda_t = -1.0;
    CHECK_THROWS_AS(simulate_aoi(p), invalid_parameter);
    p.lambda_t = 1.0;
    p.horizon = 1.0;
    p.warmup = 2.0;
    CHECK_THROWS_AS(simulate_aoi(p), invalid_parameter);

    FieldSimParams fp{SystemConfig(1.0, 1.0, 4.0), CorrelationParams(1.0, 1.0)};
    fp.region_length = 0.0;
    CHECK_THROWS_AS(simulate_field_error(fp), invalid_parameter);
    fp.region_length = 10.0;
    fp.replications = 1;
    CHECK_THROWS_AS(simulate_field_error(fp), invalid_parameter);
}
