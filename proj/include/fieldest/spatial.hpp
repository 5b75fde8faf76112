#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fieldest/model.hpp"
#include "fieldest/rng.hpp"

namespace fieldest {

// Realization of the homogeneous Poisson point process on [0, L].
struct PointSet {
    std::vector<double> locations;  // sorted ascending, all in [0, L]
    double lambda_s = 0.0;
    double region_length = 0.0;

    bool empty() const { return locations.empty(); }
    std::size_t size() const { return locations.size(); }
};

// Draws N ~ Poisson(lambda_s*L), then N i.i.d. uniform positions, sorted.
inline PointSet sample_points(double lambda_s, double region_length, rng::Stream& stream) {
    detail::require(detail::positive_finite(lambda_s), "sample_points: lambda_s must be positive");
    detail::require(detail::positive_finite(region_length), "sample_points: region length must be positive");
    PointSet out;
    out.lambda_s = lambda_s;
    out.region_length = region_length;
    const std::uint64_t n = rng::poisson_count(stream, lambda_s * region_length);
    out.locations.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        out.locations.push_back(stream.next_unit() * region_length);
    }
    std::sort(out.locations.begin(), out.locations.end());
    return out;
}

inline PointSet sample_points(double lambda_s, double region_length, std::uint64_t seed) {
    auto stream = rng::make_stream(seed, 0, 0, rng::Purpose::PointSet);
    return sample_points(lambda_s, region_length, stream);
}

namespace detail {

// Index of the nearest point plus its line distance; ties go to the lower
// index (a probability-zero event for continuous draws).
inline std::pair<std::size_t, double> nearest_on_line(const std::vector<double>& pts, double y) {
    auto it = std::lower_bound(pts.begin(), pts.end(), y);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    if (it != pts.begin()) {
        const std::size_t i = static_cast<std::size_t>(it - pts.begin()) - 1;
        best = i;
        best_d = y - pts[i];
    }
    if (it != pts.end()) {
        const std::size_t i = static_cast<std::size_t>(it - pts.begin());
        const double d = pts[i] - y;
        if (d < best_d) {
            best = i;
            best_d = d;
        }
    }
    return {best, best_d};
}

}  // namespace detail

inline double nearest_distance(const PointSet& points, double y) {
    if (points.empty()) throw no_sampler("nearest_distance: empty point set");
    return detail::nearest_on_line(points.locations, y).second;
}

// Wrap-around metric on [0, L); reproduces the infinite-line nearest-neighbor
// law without edge effects.
inline std::pair<std::size_t, double> nearest_torus(const PointSet& points, double y) {
    if (points.empty()) throw no_sampler("nearest_torus: empty point set");
    const auto& pts = points.locations;
    const double L = points.region_length;
    auto [idx, d] = detail::nearest_on_line(pts, y);
    // Wrap candidates: last point seen across 0, first point seen across L.
    const double d_front = (y - pts.back()) + L;   // pts.back() behind y via 0
    const double d_back = (pts.front() - y) + L;   // pts.front() ahead of y via L
    if (d_front >= 0.0 && d_front < d) {
        idx = pts.size() - 1;
        d = d_front;
    }
    if (d_back >= 0.0 && d_back < d) {
        idx = 0;
        d = d_back;
    }
    return {idx, d};
}

inline double nearest_distance_torus(const PointSet& points, double y) {
    return nearest_torus(points, y).second;
}

// Law of the scaled nearest-sampler distance D = b*d_min on the infinite
// line: exponential with rate 2*lambda_s/b.
inline double distance_cdf(double lambda_s, double b, double x) {
    detail::require(detail::positive_finite(lambda_s), "distance_cdf: lambda_s must be positive");
    detail::require(detail::positive_finite(b), "distance_cdf: b must be positive");
    detail::require(x >= 0.0, "distance_cdf: x must be >= 0");
    return -std::expm1(-(2.0 * lambda_s / b) * x);
}

inline double distance_lst(double lambda_s, double b, double s) {
    detail::require(detail::positive_finite(lambda_s), "distance_lst: lambda_s must be positive");
    detail::require(detail::positive_finite(b), "distance_lst: b must be positive");
    const double rate = 2.0 * lambda_s / b;
    return rate / (s + rate);
}

struct DistanceLaw {
    double rate;  // 2*lambda_s/b

    DistanceLaw(double lambda_s, double b) : rate(2.0 * lambda_s / b) {
        detail::require(detail::positive_finite(rate), "DistanceLaw: rate must be positive");
    }

    double cdf(double x) const {
        detail::require(x >= 0.0, "DistanceLaw::cdf: x must be >= 0");
        return -std::expm1(-rate * x);
    }
    double lst(double s) const { return rate / (s + rate); }
};

}  // namespace fieldest
