#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace covest {

/// SplitMix64 finalizer; used for seed derivation only, never as the
/// sampling engine.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive combination of two 64-bit values into one seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    return splitmix64(a ^ splitmix64(b));
}

/// Deterministic random stream identified by (seed, stream_id). The same
/// pair always reproduces the same draw sequence. Draw order per primitive:
///   uniform01   one engine word, top 53 bits -> [0, 1)
///   normal      Box-Muller pair on two uniforms, second value cached
///   exponential inverse CDF on one uniform
///   rademacher  top bit of one engine word
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_id_(stream_id), engine_(mix_seed(seed, stream_id)) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        // u1 in (0, 1] keeps the log argument positive.
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        cached_ = radius * std::sin(angle);
        have_cached_ = true;
        return radius * std::cos(angle);
    }

    /// Unit-rate exponential.
    double exponential() {
        return -std::log(1.0 - uniform01());
    }

    /// Fair sign in {-1.0, +1.0}.
    double rademacher() {
        return (engine_() >> 63) ? 1.0 : -1.0;
    }

private:
    std::uint64_t seed_, stream_id_;
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace covest
