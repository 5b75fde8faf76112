#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace fieldest::rng {

inline constexpr char kAlgorithmName[] = "splitmix64-counter";
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer (Stafford mix13, as used by SplittableRandom).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

// Counter-based stream: output_i = mix64(key + (i+1)*kGolden). Stateless apart
// from the counter, so any draw is reproducible from (key, index).
class Stream {
  public:
    Stream() = default;
    explicit Stream(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept {
        counter_ += 1;
        return mix64(key_ + counter_ * kGolden);
    }

    // Uniform on the open interval (0,1); never returns 0 or 1.
    double next_unit() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_exp(double rate) noexcept {
        return -std::log(next_unit()) / rate;
    }

    // Unbiased integer in [0, n) via Lemire's multiply-with-rejection.
    std::uint64_t next_below(std::uint64_t n) noexcept {
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

  private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

// Purpose tags for derived streams; recorded in run manifests.
enum class Purpose : std::uint64_t {
    PointSet = 1,
    Arrivals = 2,
    Channel = 3,
    Service = 4,
    Probes = 5,
};

// Stream key for (seed, replication, point, purpose). Chained mixing keeps
// distinct tuples on distinct keys with overwhelming probability.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t replication,
                                std::uint64_t point, Purpose purpose) noexcept {
    std::uint64_t k = mix64(seed + kGolden);
    k = mix64(k ^ (replication * 0xA0761D6478BD642FULL));
    k = mix64(k ^ (point * 0xE7037ED1A0B428DBULL));
    k = mix64(k ^ (static_cast<std::uint64_t>(purpose) * 0x8EBC6AF09C88C6E3ULL));
    return k;
}

inline Stream make_stream(std::uint64_t seed, std::uint64_t replication,
                          std::uint64_t point, Purpose purpose) noexcept {
    return Stream(stream_key(seed, replication, point, purpose));
}

// Poisson draw by counting unit-exponential arrivals until the budget is
// spent. Exact, O(mean) draws; intended for means up to ~1e6.
inline std::uint64_t poisson_count(Stream& stream, double mean) {
    std::uint64_t n = 0;
    double budget = mean;
    for (;;) {
        budget -= -std::log(stream.next_unit());
        if (budget < 0.0) return n;
        ++n;
    }
}

}  // namespace fieldest::rng
