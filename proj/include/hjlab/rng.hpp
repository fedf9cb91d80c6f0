#pragma once

#include <cmath>
#include <cstdint>

namespace hjlab {

// Counter-based RNG built on the splitmix64 finalizer. The k-th draw from a
// stream is a pure function of (stream key, k), so any (seed, kick, replica)
// substream can be recreated independently on any worker, and evaluation is
// bit-identical across runs.

inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive a child stream key from a parent key and a tag.
inline uint64_t substream(uint64_t key, uint64_t tag) {
    return mix64((key + 0x9e3779b97f4a7c15ULL) ^ (tag * 0xda942042e4dd58b5ULL));
}

/// Zigzag map for signed tags (kick indices may be negative in pullback runs).
inline uint64_t zigzag(int64_t v) {
    return (static_cast<uint64_t>(v) << 1) ^ static_cast<uint64_t>(v >> 63);
}

class Rng {
  public:
    explicit Rng(uint64_t key) : state_(key) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform in (0, 1]; never 0, safe under log().
    double next_double() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(next_u64() >> 11) * 0x1.0p-53);
    }

    /// Standard normal via Box-Muller; pairs cached.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Poisson by inverse-transform product search (exact, fine for mean < ~10^3).
    int next_poisson(double mean) {
        double limit = std::exp(-mean);
        double prod = 1.0;
        int k = -1;
        do {
            ++k;
            prod *= next_double();
        } while (prod > limit);
        return k;
    }

    bool next_coin() { return (next_u64() >> 63) != 0; }

  private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace hjlab
