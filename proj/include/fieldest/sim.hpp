#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "fieldest/model.hpp"
#include "fieldest/rng.hpp"
#include "fieldest/spatial.hpp"

namespace fieldest {

// ChannelLevel: one shared exp(mu) transmission epoch at a time; at each
// epoch completion one point is granted the slot (UR: uniform over all M,
// RR: cyclic token) and its deliverable packet, if any, departs at that
// instant. An empty grant wastes the epoch.
//
// Decoupled: the per-point service abstraction behind the closed forms.
// FCFS points are independent single-server queues with a fresh service
// draw per head-of-line packet (exp(mu0) under UR, Erlang(M, mu) under RR);
// LCFS points deliver their freshest buffered packet at the instants of a
// free-running renewal process with the same gap law. Under UR both modes
// coincide in law (the thinned channel is memoryless). Under RR they differ
// at low load: in the shared channel a packet arriving to an idle queue
// waits only the residual of the token cycle, not a full Erlang draw.
enum class ChannelMode { ChannelLevel, Decoupled };

inline const char* to_string(ChannelMode m) {
    return m == ChannelMode::ChannelLevel ? "channel" : "decoupled";
}

struct AoiSimParams {
    Discipline discipline = Discipline::Fcfs;
    Scheduler scheduler = Scheduler::UniformRandom;
    ChannelMode mode = ChannelMode::ChannelLevel;
    double lambda_t = 1.0;  // per-point arrival rate
    double mu = 1.0;        // channel service rate
    int point_count = 1;
    double horizon = 1e5;
    double warmup = 0.0;
    std::vector<double> lst_s;  // s values for the empirical LSTs (max 8)
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
};

// Exact per-sawtooth-segment integrals over the observation window.
struct PointAoiStats {
    double observed = 0.0;           // horizon - warmup
    double aoi_area = 0.0;           // integral of age
    double aoi_area2 = 0.0;          // integral of age^2
    std::vector<double> lst_area;    // integral of exp(-s*age), per s
    double queue_area = 0.0;         // integral of number-in-system (FCFS)
    long long deliveries = 0;

    double mean() const { return aoi_area / observed; }
    double second_moment() const { return aoi_area2 / observed; }
    double lst(std::size_t i) const { return lst_area[i] / observed; }
    double mean_in_system() const { return queue_area / observed; }
};

struct AoiRunStats {
    std::vector<PointAoiStats> points;
    std::vector<double> lst_s;
    long long total_deliveries = 0;
    std::vector<std::string> warnings;

    double pooled_mean() const {
        double acc = 0.0;
        for (const auto& p : points) acc += p.mean();
        return acc / static_cast<double>(points.size());
    }
    double pooled_lst(std::size_t i) const {
        double acc = 0.0;
        for (const auto& p : points) acc += p.lst(i);
        return acc / static_cast<double>(points.size());
    }
    double pooled_mean_in_system() const {
        double acc = 0.0;
        for (const auto& p : points) acc += p.mean_in_system();
        return acc / static_cast<double>(points.size());
    }
};

namespace detail {

inline constexpr std::size_t kMaxLstValues = 8;

// Two-sided 97.5% Student-t quantile (Cornish-Fisher expansion in 1/dof).
inline double student_t_975(double dof) {
    const double z = 1.959963984540054;
    const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z;
    return z + (z3 + z) / (4.0 * dof) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * dof * dof) +
           (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * dof * dof * dof);
}

struct SimPoint {
    std::deque<double> fcfs_queue;  // generation times, arrival order
    double lcfs_gen = 0.0;
    bool lcfs_occupied = false;
    double last_gen = 0.0;     // u_x: generation time of last delivery
    double seg_start = 0.0;    // time of last delivery
    double queue_mark = 0.0;   // last queue-size change
    int in_system = 0;
    double aoi_area = 0.0;
    double aoi_area2 = 0.0;
    double queue_area = 0.0;
    long long deliveries = 0;
    std::array<double, kMaxLstValues> lst_area{};
};

class AoiEngine {
  public:
    explicit AoiEngine(const AoiSimParams& params) : p_(params) {
        require(positive_finite(p_.lambda_t), "simulate_aoi: lambda_t must be positive");
        require(positive_finite(p_.mu), "simulate_aoi: mu must be positive");
        require(p_.point_count >= 1, "simulate_aoi: point count must be >= 1");
        require(p_.warmup >= 0.0 && p_.horizon > p_.warmup,
                "simulate_aoi: need horizon > warmup >= 0");
        require(p_.lst_s.size() <= kMaxLstValues, "simulate_aoi: too many LST s-values");
        for (double s : p_.lst_s) require(positive_finite(s), "simulate_aoi: LST s-values must be positive");
        points_.resize(static_cast<std::size_t>(p_.point_count));
    }

    AoiRunStats run() {
        if (p_.mode == ChannelMode::ChannelLevel) {
            run_channel_level();
        } else {
            run_decoupled();
        }
        return collect();
    }

  private:
    void age_segment(SimPoint& pt, double seg_end) {
        const double a = std::max(pt.seg_start, p_.warmup);
        const double b = std::min(seg_end, p_.horizon);
        if (b <= a) return;
        const double da = a - pt.last_gen;
        const double db = b - pt.last_gen;
        pt.aoi_area += (b - a) * (da + db) * 0.5;
        pt.aoi_area2 += (db * db * db - da * da * da) / 3.0;
        for (std::size_t i = 0; i < p_.lst_s.size(); ++i) {
            const double s = p_.lst_s[i];
            pt.lst_area[i] += (std::exp(-s * da) - std::exp(-s * db)) / s;
        }
    }

    void queue_segment(SimPoint& pt, double t) {
        const double a = std::max(pt.queue_mark, p_.warmup);
        const double b = std::min(t, p_.horizon);
        if (b > a) pt.queue_area += pt.in_system * (b - a);
        pt.queue_mark = t;
    }

    void on_arrival(SimPoint& pt, double t) {
        if (p_.discipline == Discipline::Fcfs) {
            queue_segment(pt, t);
            pt.in_system += 1;
            pt.fcfs_queue.push_back(t);
        } else {
            pt.lcfs_gen = t;  // overwrite: single freshest slot
            pt.lcfs_occupied = true;
        }
    }

    void try_deliver(SimPoint& pt, double t) {
        double gen;
        if (p_.discipline == Discipline::Fcfs) {
            if (pt.fcfs_queue.empty()) return;  // wasted epoch
            gen = pt.fcfs_queue.front();
            pt.fcfs_queue.pop_front();
            queue_segment(pt, t);
            pt.in_system -= 1;
        } else {
            if (!pt.lcfs_occupied) return;
            gen = pt.lcfs_gen;
            pt.lcfs_occupied = false;
        }
        age_segment(pt, t);
        pt.last_gen = gen;
        pt.seg_start = t;
        pt.deliveries += 1;
    }

    void run_channel_level() {
        const int m = p_.point_count;
        std::vector<rng::Stream> arrivals;
        arrivals.reserve(m);
        using Entry = std::pair<double, int>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> next_arrival;
        for (int i = 0; i < m; ++i) {
            arrivals.push_back(rng::make_stream(p_.seed, p_.replication, i, rng::Purpose::Arrivals));
            next_arrival.push({arrivals.back().next_exp(p_.lambda_t), i});
        }
        auto channel = rng::make_stream(p_.seed, p_.replication, 0, rng::Purpose::Channel);
        int token = 0;
        double epoch_end = channel.next_exp(p_.mu);
        while (epoch_end <= p_.horizon) {
            while (next_arrival.top().first <= epoch_end) {
                const auto [t, i] = next_arrival.top();
                next_arrival.pop();
                on_arrival(points_[i], t);
                next_arrival.push({t + arrivals[i].next_exp(p_.lambda_t), i});
            }
            int grant;
            if (p_.scheduler == Scheduler::UniformRandom) {
                grant = static_cast<int>(channel.next_below(static_cast<std::uint64_t>(m)));
            } else {
                grant = token;
                token = (token + 1) % m;
            }
            try_deliver(points_[grant], epoch_end);
            epoch_end += channel.next_exp(p_.mu);
        }
    }

    void run_decoupled() {
        const int m = p_.point_count;
        const double mu0 = p_.mu / m;
        const double inf = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            auto arr = rng::make_stream(p_.seed, p_.replication, i, rng::Purpose::Arrivals);
            auto svc = rng::make_stream(p_.seed, p_.replication, i, rng::Purpose::Service);
            const auto draw_service = [&]() {
                if (p_.scheduler == Scheduler::UniformRandom) return svc.next_exp(mu0);
                double g = 0.0;  // Erlang(M, mu): one full token cycle
                for (int k = 0; k < m; ++k) g += svc.next_exp(p_.mu);
                return g;
            };
            SimPoint& pt = points_[i];
            double t_arr = arr.next_exp(p_.lambda_t);
            if (p_.discipline == Discipline::Fcfs) {
                // single-server queue, service starts when a packet reaches head
                double t_done = inf;
                for (;;) {
                    if (t_arr <= t_done) {
                        if (t_arr > p_.horizon) break;
                        on_arrival(pt, t_arr);
                        if (pt.in_system == 1) t_done = t_arr + draw_service();
                        t_arr += arr.next_exp(p_.lambda_t);
                    } else {
                        if (t_done > p_.horizon) break;
                        try_deliver(pt, t_done);
                        t_done = pt.in_system > 0 ? t_done + draw_service() : inf;
                    }
                }
            } else {
                // freshest slot drained at free-running delivery opportunities
                double t_opp = draw_service();
                for (;;) {
                    if (t_arr <= t_opp) {
                        if (t_arr > p_.horizon) break;
                        on_arrival(pt, t_arr);
                        t_arr += arr.next_exp(p_.lambda_t);
                    } else {
                        if (t_opp > p_.horizon) break;
                        try_deliver(pt, t_opp);
                        t_opp += draw_service();
                    }
                }
            }
        }
    }

    AoiRunStats collect() {
        AoiRunStats out;
        out.lst_s = p_.lst_s;
        out.points.reserve(points_.size());
        for (auto& pt : points_) {
            age_segment(pt, p_.horizon);
            queue_segment(pt, p_.horizon);
            PointAoiStats st;
            st.observed = p_.horizon - p_.warmup;
            st.aoi_area = pt.aoi_area;
            st.aoi_area2 = pt.aoi_area2;
            st.lst_area.assign(pt.lst_area.begin(), pt.lst_area.begin() + p_.lst_s.size());
            st.queue_area = pt.queue_area;
            st.deliveries = pt.deliveries;
            out.total_deliveries += pt.deliveries;
            out.points.push_back(std::move(st));
        }
        if (p_.discipline == Discipline::Fcfs && p_.lambda_t * p_.point_count >= p_.mu) {
            out.warnings.push_back("FCFS load rho0 >= 1: the AoI has no stationary law");
        }
        if (out.total_deliveries == 0) {
            out.warnings.push_back("no delivery occurred within the horizon");
        }
        return out;
    }

    AoiSimParams p_;
    std::vector<SimPoint> points_;
};

}  // namespace detail

inline AoiRunStats simulate_aoi(const AoiSimParams& params) {
    return detail::AoiEngine(params).run();
}

// Warmup defaults: ten relaxation times of the per-point queue.
inline double default_warmup(Discipline discipline, double lambda_t, double mu0) {
    const double rho0 = lambda_t / mu0;
    if (discipline == Discipline::Fcfs && rho0 < 1.0) return 10.0 / ((1.0 - rho0) * mu0);
    return 10.0 * (1.0 / lambda_t + 1.0 / mu0);
}

struct FieldSimParams {
    SystemConfig config;
    CorrelationParams corr;
    double region_length = 0.0;  // simulated segment length L
    int probes = 1000;
    double horizon = 1e5;
    double warmup = -1.0;  // <0: use default_warmup
    int replications = 20;
    std::uint64_t seed = 0;
    ChannelMode mode = ChannelMode::ChannelLevel;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct SeedManifest {
    std::string algorithm = rng::kAlgorithmName;
    std::string stream_scheme = "key = mix(seed, replication, point-or-attempt, purpose)";
    std::uint64_t seed = 0;
    int replications = 0;
    long long empty_redraws = 0;  // empty Poisson point sets re-drawn
};

struct ReplicationOutcome {
    double eps = 0.0;
    double aoi_mean = 0.0;
    double lst_at_a = 0.0;
    int point_count = 0;
    int redraws = 0;
    long long deliveries = 0;
};

struct SimResult {
    double eps_hat = 0.0;
    double eps_ci95 = 0.0;
    double aoi_mean = 0.0;
    double aoi_mean_ci95 = 0.0;
    std::vector<std::pair<double, double>> lst_samples;  // (s, pooled estimate)
    int replications = 0;
    double horizon = 0.0;
    double warmup = 0.0;
    SeedManifest manifest;
    std::vector<ReplicationOutcome> per_replication;
    std::vector<std::string> warnings;
};

namespace detail {

inline ReplicationOutcome run_field_replication(const FieldSimParams& fp, double warmup,
                                                std::uint64_t rep) {
    ReplicationOutcome out;
    // Draw the sensor set; an empty draw is re-drawn with the attempt index
    // as sub-seed and counted in the manifest.
    PointSet points;
    for (std::uint64_t attempt = 0;; ++attempt) {
        auto stream = rng::make_stream(fp.seed, rep, attempt, rng::Purpose::PointSet);
        points = sample_points(fp.config.lambda_s, fp.region_length, stream);
        if (!points.empty()) break;
        out.redraws += 1;
        require(attempt < 1000, "simulate_field_error: point process keeps drawing empty sets");
    }
    out.point_count = static_cast<int>(points.size());

    AoiSimParams ap;
    ap.discipline = fp.config.discipline;
    ap.scheduler = fp.config.scheduler;
    ap.mode = fp.mode;
    ap.lambda_t = fp.config.lambda_t;
    ap.mu = fp.config.mu_bar * fp.region_length;
    ap.point_count = out.point_count;
    ap.horizon = fp.horizon;
    ap.warmup = warmup;
    ap.lst_s = {fp.corr.a};
    ap.seed = fp.seed;
    ap.replication = rep;
    const AoiRunStats stats = simulate_aoi(ap);
    out.deliveries = stats.total_deliveries;

    auto probe_stream = rng::make_stream(fp.seed, rep, 0, rng::Purpose::Probes);
    double eps_acc = 0.0;
    for (int j = 0; j < fp.probes; ++j) {
        const double y = probe_stream.next_unit() * fp.region_length;
        const auto [idx, d] = nearest_torus(points, y);
        eps_acc += 1.0 - std::exp(-fp.corr.b * d) * stats.points[idx].lst(0);
    }
    out.eps = eps_acc / fp.probes;
    out.aoi_mean = stats.pooled_mean();
    out.lst_at_a = stats.pooled_lst(0);
    return out;
}

struct MeanCi {
    double mean;
    double ci95;
};

inline MeanCi mean_ci(const std::vector<double>& xs) {
    const auto n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    if (xs.size() < 2) return {mean, 0.0};
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    return {mean, student_t_975(n - 1.0) * std::sqrt(var / n)};
}

}  // namespace detail

// Monte Carlo estimate of the field error. Replications are independent
// (seeded per index) and run in parallel; the reduction is ordered by
// replication index, so results are bit-identical for any thread count.
inline SimResult simulate_field_error(const FieldSimParams& params) {
    detail::require(detail::positive_finite(params.region_length),
                    "simulate_field_error: region length must be positive");
    detail::require(params.probes >= 1, "simulate_field_error: need at least one probe");
    detail::require(params.replications >= 2, "simulate_field_error: need at least two replications");
    detail::require(detail::positive_finite(params.config.lambda_s) &&
                        detail::positive_finite(params.config.lambda_t) &&
                        detail::positive_finite(params.config.mu_bar),
                    "simulate_field_error: rates must be positive");

    const double mu0 = params.config.mu_bar / params.config.lambda_s;
    const double warmup = params.warmup >= 0.0
                              ? params.warmup
                              : default_warmup(params.config.discipline, params.config.lambda_t, mu0);
    detail::require(params.horizon > warmup, "simulate_field_error: horizon must exceed warmup");

    SimResult result;
    result.replications = params.replications;
    result.horizon = params.horizon;
    result.warmup = warmup;
    result.manifest.seed = params.seed;
    result.manifest.replications = params.replications;
    if (params.config.lambda_s * params.region_length < 10.0) {
        result.warnings.push_back("lambda_s*L < 10: strong finite-size effects expected");
    }
    if (params.config.discipline == Discipline::Fcfs &&
        params.config.lambda_t >= mu0) {
        result.warnings.push_back("FCFS load rho0 >= 1: no stationary error exists");
    }

    result.per_replication.resize(params.replications);
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned threads =
        std::min<unsigned>(params.threads == 0 ? hw : params.threads,
                           static_cast<unsigned>(params.replications));
    if (threads <= 1) {
        for (int r = 0; r < params.replications; ++r) {
            result.per_replication[r] = detail::run_field_replication(params, warmup, r);
        }
    } else {
        std::atomic<int> next{0};
        std::atomic<bool> failed{false};
        auto worker = [&]() {
            for (;;) {
                const int r = next.fetch_add(1);
                if (r >= params.replications || failed.load()) return;
                try {
                    result.per_replication[r] = detail::run_field_replication(params, warmup, r);
                } catch (...) {
                    failed.store(true);
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        detail::require(!failed.load(), "simulate_field_error: a replication failed");
    }

    std::vector<double> eps, aoi, lst;
    long long deliveries = 0;
    for (const auto& rep : result.per_replication) {
        eps.push_back(rep.eps);
        aoi.push_back(rep.aoi_mean);
        lst.push_back(rep.lst_at_a);
        result.manifest.empty_redraws += rep.redraws;
        deliveries += rep.deliveries;
    }
    if (deliveries == 0) {
        result.warnings.push_back(
            "no delivery within the horizon: ages only grow (t=0 spatial diagnostic)");
    }
    const auto e = detail::mean_ci(eps);
    const auto a = detail::mean_ci(aoi);
    result.eps_hat = e.mean;
    result.eps_ci95 = e.ci95;
    result.aoi_mean = a.mean;
    result.aoi_mean_ci95 = a.ci95;
    result.lst_samples.push_back({params.corr.a, detail::mean_ci(lst).mean});
    return result;
}

// --- Channel-level vs decoupled equivalence ----------------------------------

struct EquivalenceParams {
    Scheduler scheduler = Scheduler::UniformRandom;
    double lambda_t = 0.1;
    double mu = 4.0;
    int point_count = 4;
    double horizon = 2e5;
    double warmup = -1.0;
    int replications = 12;
    std::vector<double> lst_s = {0.5, 1.0, 2.0};
    std::uint64_t seed = 0;
};

struct EquivalenceRow {
    std::string stat;
    double channel_value = 0.0;
    double decoupled_value = 0.0;
    double diff = 0.0;
    double ci95 = 0.0;  // pooled 95% CI half-width for the difference
    bool pass = false;
};

struct EquivalenceReport {
    std::vector<EquivalenceRow> rows;
    bool passed = true;
};

// Runs both channel models on independent streams and compares per-point AoI
// mean and empirical LSTs; a statistic passes when the difference of
// replication means lies within the pooled 95% CI (Welch).
inline EquivalenceReport equivalence_check(const EquivalenceParams& params) {
    detail::require(params.replications >= 2, "equivalence_check: need at least two replications");
    const double mu0 = params.mu / params.point_count;
    detail::require(params.lambda_t < mu0, "equivalence_check: stable FCFS parameters required");
    const double warmup = params.warmup >= 0.0
                              ? params.warmup
                              : default_warmup(Discipline::Fcfs, params.lambda_t, mu0);

    const std::size_t n_stats = 1 + params.lst_s.size();
    std::vector<std::vector<double>> samples[2];
    const std::uint64_t mode_seed[2] = {rng::mix64(params.seed ^ 0x4368616E6E656CULL),
                                        rng::mix64(params.seed ^ 0x4465636F75706CULL)};
    for (int m = 0; m < 2; ++m) {
        samples[m].assign(n_stats, {});
        for (int r = 0; r < params.replications; ++r) {
            AoiSimParams ap;
            ap.discipline = Discipline::Fcfs;
            ap.scheduler = params.scheduler;
            ap.mode = m == 0 ? ChannelMode::ChannelLevel : ChannelMode::Decoupled;
            ap.lambda_t = params.lambda_t;
            ap.mu = params.mu;
            ap.point_count = params.point_count;
            ap.horizon = params.horizon;
            ap.warmup = warmup;
            ap.lst_s = params.lst_s;
            ap.seed = mode_seed[m];
            ap.replication = r;
            const AoiRunStats stats = simulate_aoi(ap);
            samples[m][0].push_back(stats.pooled_mean());
            for (std::size_t i = 0; i < params.lst_s.size(); ++i) {
                samples[m][1 + i].push_back(stats.pooled_lst(i));
            }
        }
    }

    EquivalenceReport report;
    for (std::size_t k = 0; k < n_stats; ++k) {
        EquivalenceRow row;
        row.stat = k == 0 ? "aoi_mean" : "lst@" + std::to_string(params.lst_s[k - 1]);
        const auto n = static_cast<double>(params.replications);
        double mean[2], var[2];
        for (int m = 0; m < 2; ++m) {
            mean[m] = 0.0;
            for (double x : samples[m][k]) mean[m] += x;
            mean[m] /= n;
            var[m] = 0.0;
            for (double x : samples[m][k]) var[m] += (x - mean[m]) * (x - mean[m]);
            var[m] /= (n - 1.0);
        }
        row.channel_value = mean[0];
        row.decoupled_value = mean[1];
        row.diff = mean[0] - mean[1];
        const double se2 = var[0] / n + var[1] / n;
        const double dof = se2 > 0.0
                               ? se2 * se2 / ((var[0] / n) * (var[0] / n) / (n - 1.0) +
                                              (var[1] / n) * (var[1] / n) / (n - 1.0))
                               : n - 1.0;
        row.ci95 = detail::student_t_975(dof) * std::sqrt(se2);
        row.pass = std::abs(row.diff) <= row.ci95;
        report.passed = report.passed && row.pass;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace fieldest
