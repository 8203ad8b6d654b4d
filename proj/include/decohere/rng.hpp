#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "decohere/types.hpp"

namespace decohere {

/// Seedable, splittable generator. Streams derived with split() are
/// independent of draw order in the parent, so adding a draw to one stream
/// never perturbs another.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    Rng split(std::string_view label) const;
    Rng split(std::uint64_t index) const;

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits; bit-exact across platforms.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool coin() { return (engine_() >> 63) != 0; }

    /// Uniformly distributed pure state of a two-level system (Haar / Bloch sphere).
    std::pair<cplx, cplx> bloch_state();

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace decohere
