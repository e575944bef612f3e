#pragma once

#include <cmath>
#include <cstdint>

namespace qis {

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30; z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27; z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

/// Combine a seed with stream coordinates into an independent stream key.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = mix64(seed + 0x9e3779b97f4a7c15ULL);
    z = mix64(z ^ (a * 0xd1342543de82ef95ULL));
    z = mix64(z ^ (b * 0xaf251af3b0f025b5ULL));
    return z;
}

/// Counter-style generator: the stream is a pure function of its key, so
/// any (jot, frame) stream can be regenerated in isolation and in any order.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : state_(key) {}
    CounterRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
        : state_(stream_key(seed, a, b)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform double in [0,1).
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

/// Poisson(theta) draw. Inversion for small theta, PTRS transformed
/// rejection (Hormann) otherwise; both consume a variable number of
/// uniforms from the caller's stream.
inline long poisson_sample(double theta, CounterRng& rng) {
    if (theta <= 0.0) return 0;
    if (theta < 10.0) {
        const double l = std::exp(-theta);
        long k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= rng.uniform();
        } while (p > l);
        return k - 1;
    }
    const double b = 0.931 + 2.53 * std::sqrt(theta);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_theta = std::log(theta);
    for (;;) {
        double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + theta + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        const double rhs = kf * log_theta - theta - std::lgamma(kf + 1.0);
        if (lhs <= rhs) return static_cast<long>(kf);
    }
}

}  // namespace qis
