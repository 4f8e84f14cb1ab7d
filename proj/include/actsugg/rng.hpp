#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

#include "actsugg/errors.hpp"

namespace actsugg {

/// Independent random streams used inside one episode. Splitting by role keeps
/// agent variants comparable under common random numbers.
enum class StreamRole : std::uint64_t {
    environment = 1,
    agent = 2,
    suggester = 3,
    delivery = 4,
    solver = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Thin wrapper over mt19937_64. Draws are computed from raw engine output so
/// sequences do not depend on the standard library's distribution classes.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Counter-based derivation: the stream depends only on (seed, index, role).
    static Rng stream(std::uint64_t seed, std::uint64_t index, StreamRole role) {
        std::uint64_t h = splitmix64(seed);
        h = splitmix64(h ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
        h = splitmix64(h ^ static_cast<std::uint64_t>(role));
        return Rng(h);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n) {
        if (n == 0) throw ArgumentError("Rng::below: empty range");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % n);
    }

    /// Index drawn proportionally to `weights` (need not be normalized).
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw ArgumentError("Rng::categorical: zero total weight");
        const double target = uniform() * total;
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            acc += weights[i];
            last_positive = i;
            if (target < acc) return i;
        }
        return last_positive;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace actsugg
