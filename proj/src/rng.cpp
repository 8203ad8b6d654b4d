#include "decohere/rng.hpp"

#include <cmath>
#include <numbers>

namespace decohere {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::split(std::string_view label) const { return Rng(splitmix64(seed_ ^ fnv1a(label))); }

Rng Rng::split(std::uint64_t index) const { return Rng(splitmix64(seed_ + splitmix64(index + 1))); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::pair<cplx, cplx> Rng::bloch_state() {
    const double cos_theta = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    const double c1 = std::sqrt(0.5 * (1.0 + cos_theta));
    const double s1 = std::sqrt(0.5 * (1.0 - cos_theta));
    return {cplx(c1, 0.0), std::polar(s1, phi)};
}

}  // namespace decohere
