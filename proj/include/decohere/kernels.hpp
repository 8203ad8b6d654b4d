#pragma once

// Data-parallel kernels over state-vector amplitudes. Every kernel exists in
// two flavors with the same signature: `serial` is the plain reference loop
// kept for testing, `parallel` is the OpenMP version used by the library.
// apply_h, rotate_sites, axpy, accumulate and interaction_diag produce
// bit-identical output in both flavors. dot/norm2 in `parallel` sum over
// fixed-size blocks, so their result does not depend on the thread count but
// may differ from the serial loop in the last bits.

#include <span>

#include "decohere/types.hpp"

namespace decohere::kernels {

/// Coefficients of the matrix-free Hamiltonian. `coupling` holds v^l_{i,sigma}
/// flattened as [l][i][sigma] (4 entries per site). `diag` is the precomputed
/// interaction diagonal of length 2^(M+1) (may be empty for SelfOnly).
struct HamiltonianTerms {
    int num_sites = 0;
    double tunneling = 0.0;
    std::span<const double> omega;
    std::span<const double> diag;
};

inline constexpr std::size_t kReductionBlock = 4096;

namespace serial {

void interaction_diag(int num_sites, std::span<const double> coupling, std::span<double> out);
void apply_h(const HamiltonianTerms& h, HamiltonianPart part, std::span<const cplx> in, std::span<cplx> out);
void rotate_sites(int num_sites, std::span<const double> angles, std::span<cplx> psi);
void rotate_system(int num_sites, double angle, std::span<cplx> psi);
void axpy(std::span<cplx> out, std::span<const cplx> x, cplx alpha, std::span<const cplx> y);
void accumulate(std::span<cplx> acc, double weight, std::span<const cplx> y);
cplx dot(std::span<const cplx> a, std::span<const cplx> b);
double norm2(std::span<const cplx> a);

}  // namespace serial

namespace parallel {

void interaction_diag(int num_sites, std::span<const double> coupling, std::span<double> out);
void apply_h(const HamiltonianTerms& h, HamiltonianPart part, std::span<const cplx> in, std::span<cplx> out);
void rotate_sites(int num_sites, std::span<const double> angles, std::span<cplx> psi);
void rotate_system(int num_sites, double angle, std::span<cplx> psi);
void axpy(std::span<cplx> out, std::span<const cplx> x, cplx alpha, std::span<const cplx> y);
void accumulate(std::span<cplx> acc, double weight, std::span<const cplx> y);
cplx dot(std::span<const cplx> a, std::span<const cplx> b);
double norm2(std::span<const cplx> a);

}  // namespace parallel

}  // namespace decohere::kernels
