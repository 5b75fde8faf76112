#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fieldest/error.hpp"
#include "fieldest/model.hpp"

namespace fieldest {

struct LocalMinimum {
    double lambda_s;
    double lambda_t;
    double eps;
};

enum class OptimizeMethod { GridRefine, ClosedForm };

struct OptimizationResult {
    double lambda_s_star = 0.0;
    double lambda_t_star = 0.0;       // +inf marker for LCFS
    bool lambda_t_unbounded = false;
    double eps_star = 1.0;
    OptimizeMethod method = OptimizeMethod::GridRefine;
    long evaluations = 0;
    std::string feasible_region;
    std::vector<LocalMinimum> local_minima;       // refined, best first
    std::optional<double> practical_lambda_t;     // LCFS: within 1% of the limit
};

struct SearchOptions {
    int coarse_points = 64;          // per axis
    double span_decades = 3.0;       // grid spans [10^-span, 10^+span] x center
    double stability_margin = 1e-3;  // keep lambda_s*lambda_t < (1-margin)*mu_bar
    double rel_tol = 1e-4;           // stop when relative cell width drops below
    int refine_points = 9;           // per axis, per refinement box
    std::optional<std::pair<double, double>> lambda_s_range;
    std::optional<std::pair<double, double>> lambda_t_range;
};

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> out;
    out.reserve(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        out.push_back(std::exp(llo + f * (lhi - llo)));
    }
    return out;
}

inline double eps_fcfs_at(const CorrelationParams& corr, double mu_bar, double ls, double lt) {
    return eps_fcfs(SystemConfig(ls, lt, mu_bar, Discipline::Fcfs), corr).eps_bar;
}

}  // namespace detail

// Closed-form LCFS optimum: lambda_t* unbounded, lambda_s* = sqrt(b*mu_bar/(2a)),
// eps* = 1 - F(sqrt(2*mu_bar/(a*b)))^2.
inline OptimizationResult optimize_lcfs(const CorrelationParams& corr, double mu_bar) {
    detail::require(detail::positive_finite(mu_bar), "optimize_lcfs: mu_bar must be positive");
    OptimizationResult out;
    out.method = OptimizeMethod::ClosedForm;
    out.lambda_s_star = std::sqrt(corr.b * mu_bar / (2.0 * corr.a));
    out.lambda_t_star = std::numeric_limits<double>::infinity();
    out.lambda_t_unbounded = true;
    const double balanced = std::sqrt(2.0 * mu_bar / (corr.a * corr.b));
    const double f = detail::rate_factor(balanced);
    out.eps_star = 1.0 - f * f;
    out.feasible_region = "lambda_s > 0, lambda_t > 0 (no stability constraint)";
    out.local_minima.push_back({out.lambda_s_star, out.lambda_t_star, out.eps_star});

    // Smallest lambda_t within 1% of the limit error, by doubling + bisection
    // (eps is decreasing in lambda_t).
    const double target = out.eps_star * 1.01;
    const auto eps_at = [&](double lt) {
        return eps_lcfs(SystemConfig(out.lambda_s_star, lt, mu_bar, Discipline::Lcfs), corr).eps_bar;
    };
    double hi = std::max(corr.a, mu_bar / out.lambda_s_star);
    int guard = 0;
    while (eps_at(hi) > target && guard++ < 200) hi *= 2.0;
    ++out.evaluations;
    if (eps_at(hi) <= target) {
        double lo = hi / 2.0;
        if (eps_at(lo) <= target) lo = 1e-12 * hi;
        for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-9; ++i) {
            const double mid = std::sqrt(lo * hi);
            (eps_at(mid) <= target ? hi : lo) = mid;
            ++out.evaluations;
        }
        out.practical_lambda_t = hi;
    }
    return out;
}

// FCFS: coarse logarithmic grid over the feasible wedge, then local grid
// refinement around every surviving coarse local minimum. Deterministic;
// incumbent never worsens across iterations.
inline OptimizationResult optimize_fcfs(const CorrelationParams& corr, double mu_bar,
                                        const SearchOptions& options = {}) {
    detail::require(detail::positive_finite(mu_bar), "optimize_fcfs: mu_bar must be positive");
    detail::require(options.coarse_points >= 4, "optimize_fcfs: need at least 4 grid points");

    OptimizationResult out;
    out.method = OptimizeMethod::GridRefine;
    out.feasible_region = "lambda_s*lambda_t < (1-" + std::to_string(options.stability_margin) +
                          ")*mu_bar";
    const double cap = (1.0 - options.stability_margin) * mu_bar;

    const double center_s = std::sqrt(corr.b * mu_bar / (2.0 * corr.a));
    const double center_t = mu_bar / center_s;
    const double span = std::pow(10.0, options.span_decades);
    const auto [s_lo, s_hi] = options.lambda_s_range.value_or(
        std::make_pair(center_s / span, center_s * span));
    const auto [t_lo, t_hi] = options.lambda_t_range.value_or(
        std::make_pair(center_t / span, center_t * span));
    detail::require(s_lo > 0 && s_hi > s_lo && t_lo > 0 && t_hi > t_lo,
                    "optimize_fcfs: malformed search ranges");

    const auto ls = detail::log_grid(s_lo, s_hi, options.coarse_points);
    const auto lt = detail::log_grid(t_lo, t_hi, options.coarse_points);
    const int n = options.coarse_points;
    const double kInfeasible = std::numeric_limits<double>::infinity();
    std::vector<double> eps(static_cast<std::size_t>(n) * n, kInfeasible);
    bool any_feasible = false;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (ls[i] * lt[j] < cap) {
                eps[static_cast<std::size_t>(i) * n + j] =
                    detail::eps_fcfs_at(corr, mu_bar, ls[i], lt[j]);
                ++out.evaluations;
                any_feasible = true;
            }
        }
    }
    if (!any_feasible) throw invalid_parameter("optimize_fcfs: empty feasible grid");

    // Coarse local minima: feasible nodes not beaten by any feasible neighbor.
    std::vector<LocalMinimum> seeds;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double v = eps[static_cast<std::size_t>(i) * n + j];
            if (!std::isfinite(v)) continue;
            bool is_min = true;
            for (int di = -1; di <= 1 && is_min; ++di) {
                for (int dj = -1; dj <= 1 && is_min; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
                    const double w = eps[static_cast<std::size_t>(ii) * n + jj];
                    if (std::isfinite(w) && w < v) is_min = false;
                }
            }
            if (is_min) seeds.push_back({ls[i], lt[j], v});
        }
    }
    std::sort(seeds.begin(), seeds.end(), [](const auto& p, const auto& q) {
        if (p.eps != q.eps) return p.eps < q.eps;
        if (p.lambda_s != q.lambda_s) return p.lambda_s < q.lambda_s;
        return p.lambda_t < q.lambda_t;
    });
    if (seeds.size() > 8) seeds.resize(8);  // plateaus can spray duplicates

    const double coarse_step_s = std::log(ls[1] / ls[0]);
    const double coarse_step_t = std::log(lt[1] / lt[0]);
    const int rn = options.refine_points;

    std::vector<LocalMinimum> refined;
    for (const auto& seed : seeds) {
        LocalMinimum inc = seed;
        double half_s = coarse_step_s, half_t = coarse_step_t;
        while (std::max(half_s, half_t) > options.rel_tol) {
            const auto gs = detail::log_grid(inc.lambda_s * std::exp(-half_s),
                                             inc.lambda_s * std::exp(half_s), rn);
            const auto gt = detail::log_grid(inc.lambda_t * std::exp(-half_t),
                                             inc.lambda_t * std::exp(half_t), rn);
            for (double s : gs) {
                for (double t : gt) {
                    if (!(s * t < cap)) continue;
                    const double v = detail::eps_fcfs_at(corr, mu_bar, s, t);
                    ++out.evaluations;
                    if (v < inc.eps ||
                        (v == inc.eps && std::make_pair(s, t) <
                                             std::make_pair(inc.lambda_s, inc.lambda_t))) {
                        inc = {s, t, v};
                    }
                }
            }
            half_s *= 2.0 / (rn - 1);  // new cell spans one refined step
            half_t *= 2.0 / (rn - 1);
        }
        refined.push_back(inc);
    }

    // Merge refinements that converged to the same point.
    std::sort(refined.begin(), refined.end(), [](const auto& p, const auto& q) {
        if (p.eps != q.eps) return p.eps < q.eps;
        if (p.lambda_s != q.lambda_s) return p.lambda_s < q.lambda_s;
        return p.lambda_t < q.lambda_t;
    });
    for (const auto& m : refined) {
        const bool dup = std::any_of(out.local_minima.begin(), out.local_minima.end(),
                                     [&](const LocalMinimum& k) {
                                         return std::abs(std::log(k.lambda_s / m.lambda_s)) < 1e-3 &&
                                                std::abs(std::log(k.lambda_t / m.lambda_t)) < 1e-3;
                                     });
        if (!dup) out.local_minima.push_back(m);
    }

    const auto& best = out.local_minima.front();
    out.lambda_s_star = best.lambda_s;
    out.lambda_t_star = best.lambda_t;
    out.eps_star = best.eps;
    return out;
}

// One sweep grid node; infeasible FCFS nodes carry no value.
struct SweepCell {
    double lambda_s;
    double lambda_t;
    std::optional<double> eps;
    bool feasible() const { return eps.has_value(); }
};

struct SweepSpec {
    std::vector<double> lambda_s_values;
    std::vector<double> lambda_t_values;
};

// Evaluates the analytic error on the grid, lambda_s-major ascending.
inline std::vector<SweepCell> sweep(const SystemConfig& base, const CorrelationParams& corr,
                                    const SweepSpec& spec) {
    const auto check_axis = [](const std::vector<double>& axis, const char* name) {
        detail::require(!axis.empty(), "sweep: empty axis");
        for (std::size_t i = 0; i < axis.size(); ++i) {
            detail::require(detail::positive_finite(axis[i]), name);
            if (i > 0) detail::require(axis[i] > axis[i - 1], "sweep: axis must be strictly increasing");
        }
    };
    check_axis(spec.lambda_s_values, "sweep: lambda_s values must be positive and finite");
    check_axis(spec.lambda_t_values, "sweep: lambda_t values must be positive and finite");

    std::vector<SweepCell> out;
    out.reserve(spec.lambda_s_values.size() * spec.lambda_t_values.size());
    for (double ls : spec.lambda_s_values) {
        for (double lt : spec.lambda_t_values) {
            SweepCell cell{ls, lt, std::nullopt};
            SystemConfig config = base;
            config.lambda_s = ls;
            config.lambda_t = lt;
            if (config.discipline == Discipline::Lcfs || ls * lt < base.mu_bar) {
                try {
                    cell.eps = eps_analytic(config, corr).eps_bar;
                } catch (const unstable_queue&) {
                    // the product test and validate's division path can round
                    // differently exactly on the boundary; keep the sentinel
                }
            }
            out.push_back(cell);
        }
    }
    return out;
}

}  // namespace fieldest
