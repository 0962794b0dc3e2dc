#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace hrq {

// Derives a child seed from a root seed and a stream name, so that every
// source of randomness (data, init, gumbel, dropout, ...) can be varied
// independently while staying reproducible from the single root seed.
uint64_t derive_seed(uint64_t root, std::string_view stream_name);

// Variant for per-step streams: noise at training step t is replayable
// without consuming state from other steps.
uint64_t derive_seed(uint64_t root, std::string_view stream_name, uint64_t index);

// Deterministic random stream. All distributions are implemented on top of
// the raw mt19937_64 output so sequences are bit-identical across compilers
// (std::normal_distribution et al. are implementation-defined).
class RngStream {
  public:
    explicit RngStream(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform on [0,1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0,1); safe to feed into log().
    double uniform_pos() {
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return u;
    }

    // [0, n)
    int uniform_int(int n) {
        // Rejection sampling keeps the distribution exact for any n.
        const uint64_t limit = UINT64_MAX - UINT64_MAX % static_cast<uint64_t>(n);
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<int>(x % static_cast<uint64_t>(n));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller; the sine branch is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Standard Gumbel(0,1): -log(-log(U)).
    double gumbel() { return -std::log(-std::log(uniform_pos())); }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace hrq
