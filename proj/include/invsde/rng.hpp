#pragma once

#include <cmath>
#include <cstdint>

namespace invsde {

/// splitmix64 finalizer (Stafford mix 13).
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

/// Counter-based uniform generator: output i of a stream with key k is
/// mix64(k + (i+1) * GAMMA), the splitmix64 sequence. Substreams are keyed
/// by hashing the master seed with the stream index, so trajectories can
/// run on any worker in any order and still read the same numbers.
class counter_rng {
public:
    static constexpr std::uint64_t gamma = 0x9E3779B97F4A7C15ULL; // 2^64 / phi
    static constexpr std::uint64_t stream_salt = 0xD1B54A32D192ED03ULL;

    explicit counter_rng(std::uint64_t key) : key_(key) {}

    static counter_rng substream(std::uint64_t master_seed, std::uint64_t stream_index) {
        return counter_rng(mix64(master_seed + stream_salt * (stream_index + 1)));
    }

    std::uint64_t next_u64() { return mix64(key_ + gamma * (++counter_)); }

    /// Uniform in [0, 1) with 53 random bits.
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

    /// Standard normal via the Marsaglia polar method; the second variate of
    /// each accepted pair is cached.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_uniform() - 1.0;
            v = 2.0 * next_uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace invsde
