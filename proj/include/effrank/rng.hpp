#pragma once

// Counter-based splittable random number generation.  Every experiment trial
// owns stream (master_seed, stream_id); outputs depend only on the stream key
// and a per-stream counter, so results are bit-identical no matter how trials
// are scheduled across threads.

#include <cmath>
#include <cstdint>

namespace effrank {

struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
};

// Stafford variant 13 of the 64-bit finalizer (the splitmix64 mixer).
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

class Rng {
  public:
    static constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;

    explicit Rng(SeedSpec seed)
        : key_(mix64(mix64(seed.master_seed + golden) ^ seed.stream_id)) {}

    Rng(std::uint64_t master_seed, std::uint64_t stream_id)
        : Rng(SeedSpec{master_seed, stream_id}) {}

    std::uint64_t next_u64() { return mix64(key_ + ++counter_ * golden); }

    // uniform on [0, 1) with 53 bits
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform on (0, 1], safe as a log argument
    double uniform_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

    // standard normal, Box-Muller; the second deviate of each pair is cached
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double a = 6.28318530717958647692 * uniform();
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double exponential() { return -std::log(uniform_pos()); }

    // zero-mean Laplace with the given scale parameter b (variance 2b^2)
    double laplace(double b) { return rademacher() * b * exponential(); }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace effrank
