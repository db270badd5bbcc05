#ifndef ENGAGE_RNG_HPP
#define ENGAGE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

namespace engage {

// PCG32 (O'Neill's pcg32_random_r, the minimal variant). Owned by callers
// and threaded explicitly through every stochastic operation; there is no
// global generator. All derived draws (uniform doubles, normals, shuffles)
// are implemented here by hand so that streams are identical across
// standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed, uint64_t stream = 0xda3e39cb94b95bdbULL) {
        state_ = 0u;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    uint64_t next_u64() {
        uint64_t hi = next_u32();
        uint64_t lo = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform in [0, 1), 53-bit mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) via rejection.
    uint32_t uniform_int(uint32_t n) {
        uint32_t threshold = (0u - n) % n;
        for (;;) {
            uint32_t r = next_u32();
            if (r >= threshold) return r % n;
        }
    }

    // Box-Muller, no cached spare: each call consumes exactly two uniforms.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Fisher-Yates; spelled out because std::shuffle is implementation-defined.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = uniform_int(static_cast<uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Deterministic child generator, for per-entity substreams.
    Rng fork(uint64_t salt) { return Rng(next_u64() ^ salt, next_u64() | 1u); }

private:
    uint64_t state_;
    uint64_t inc_;
};

} // namespace engage

#endif
