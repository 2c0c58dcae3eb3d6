#ifndef ROM_RNG_HPP
#define ROM_RNG_HPP

#include <cstdint>
#include <string_view>

namespace rom {

// Small counter-free PRNG (xoshiro256**), seeded through SplitMix64.
// Used everywhere randomness is needed so that results do not depend on
// the standard library's unspecified distribution algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();
    // Uniform in [a, b).
    double uniform(double a, double b);
    // Standard normal via Box-Muller (polar rejection-free form).
    double normal();
    // Uniform integer in [0, n). Modulo mapping; the tiny bias is
    // irrelevant here and keeps the mapping trivially reproducible.
    std::uint64_t below(std::uint64_t n);

    // Derives a stage-specific seed from a master seed, so that every
    // pipeline stage (basis sketch, weight init, shuffling, bootstrap, ...)
    // is independently reproducible.
    static std::uint64_t derive(std::uint64_t master, std::string_view stage);

private:
    std::uint64_t s_[4];
    bool have_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

} // namespace rom

#endif
