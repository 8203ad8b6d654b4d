#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>

namespace decohere {

using cplx = std::complex<double>;

/// Environment configuration: bit l set means site l+1 is |down>, clear means |up>.
using EnvConfig = std::uint64_t;

/// System pointer index: 0 encodes |phi_1>, 1 encodes |phi_2>.
enum class Pointer : int { First = 0, Second = 1 };

enum class HamiltonianPart { Full, SelfOnly, InteractionOnly };

/// Largest M for which a full state vector may be allocated (2^17 amplitudes).
inline constexpr int kMaxStateSites = 16;

/// Largest M for which the dense Hamiltonian oracle is built (512 x 512).
inline constexpr int kMaxDenseSites = 8;

inline constexpr std::size_t env_dim(int num_sites) { return std::size_t{1} << num_sites; }

inline constexpr int site_bit(EnvConfig nu, int site) { return static_cast<int>((nu >> site) & 1U); }

}  // namespace decohere
