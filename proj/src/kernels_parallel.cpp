#include <algorithm>
#include <cmath>
#include <vector>

#include <omp.h>

#include "decohere/kernels.hpp"

namespace decohere::kernels::parallel {

namespace {

using index_t = std::ptrdiff_t;

// Large enough that thread start-up does not dominate for small M.
constexpr index_t kMinParallel = 1 << 12;

}  // namespace

void interaction_diag(int num_sites, std::span<const double> coupling, std::span<double> out) {
    const index_t n = static_cast<index_t>(env_dim(num_sites));
#pragma omp parallel for schedule(static) if (2 * n >= kMinParallel)
    for (index_t i = 0; i < 2 * n; ++i) {
        const index_t s = i / n;
        const auto nu = static_cast<EnvConfig>(i % n);
        double sum = 0.0;
        for (int l = 0; l < num_sites; ++l) sum += coupling[4 * l + 2 * s + site_bit(nu, l)];
        out[i] = sum;
    }
}

void apply_h(const HamiltonianTerms& h, HamiltonianPart part, std::span<const cplx> in, std::span<cplx> out) {
    const index_t n = static_cast<index_t>(env_dim(h.num_sites));
    const bool self = part != HamiltonianPart::InteractionOnly;
    const bool inter = part != HamiltonianPart::SelfOnly;
    const cplx* src = in.data();
    cplx* dst = out.data();
    const double* omega = h.omega.data();
    const double* diag = h.diag.data();
#pragma omp parallel for schedule(static) if (2 * n >= kMinParallel)
    for (index_t i = 0; i < 2 * n; ++i) {
        cplx acc{};
        if (self) {
            acc = h.tunneling * src[i ^ n];
            for (int l = 0; l < h.num_sites; ++l) acc += omega[l] * src[i ^ (index_t{1} << l)];
        }
        if (inter) acc += diag[i] * src[i];
        dst[i] = acc;
    }
}

void rotate_sites(int num_sites, std::span<const double> angles, std::span<cplx> psi) {
    const index_t half = static_cast<index_t>(env_dim(num_sites));  // pairs per site: 2^(M+1) / 2
    cplx* p = psi.data();
    for (int l = 0; l < num_sites; ++l) {
        const double c = std::cos(angles[l]);
        const cplx mis(0.0, -std::sin(angles[l]));
        const index_t bit = index_t{1} << l;
        const index_t low = bit - 1;
#pragma omp parallel for schedule(static) if (half >= kMinParallel)
        for (index_t k = 0; k < half; ++k) {
            // Insert a zero at bit position l to enumerate indices with that bit clear.
            const index_t i = ((k & ~low) << 1) | (k & low);
            const cplx x0 = p[i];
            const cplx x1 = p[i | bit];
            p[i] = c * x0 + mis * x1;
            p[i | bit] = mis * x0 + c * x1;
        }
    }
}

void rotate_system(int num_sites, double angle, std::span<cplx> psi) {
    const index_t n = static_cast<index_t>(env_dim(num_sites));
    const double c = std::cos(angle);
    const cplx mis(0.0, -std::sin(angle));
    cplx* p = psi.data();
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (index_t i = 0; i < n; ++i) {
        const cplx x0 = p[i];
        const cplx x1 = p[i + n];
        p[i] = c * x0 + mis * x1;
        p[i + n] = mis * x0 + c * x1;
    }
}

void axpy(std::span<cplx> out, std::span<const cplx> x, cplx alpha, std::span<const cplx> y) {
    const index_t n = static_cast<index_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (index_t i = 0; i < n; ++i) out[i] = x[i] + alpha * y[i];
}

void accumulate(std::span<cplx> acc, double weight, std::span<const cplx> y) {
    const index_t n = static_cast<index_t>(acc.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (index_t i = 0; i < n; ++i) acc[i] += weight * y[i];
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
    const index_t n = static_cast<index_t>(a.size());
    const index_t block = static_cast<index_t>(kReductionBlock);
    const index_t nblocks = (n + block - 1) / block;
    std::vector<cplx> partial(static_cast<std::size_t>(nblocks));
#pragma omp parallel for schedule(static) if (nblocks > 1)
    for (index_t k = 0; k < nblocks; ++k) {
        cplx sum{};
        const index_t end = std::min(n, (k + 1) * block);
        for (index_t i = k * block; i < end; ++i) sum += std::conj(a[i]) * b[i];
        partial[k] = sum;
    }
    cplx total{};
    for (const cplx& p : partial) total += p;
    return total;
}

double norm2(std::span<const cplx> a) {
    const index_t n = static_cast<index_t>(a.size());
    const index_t block = static_cast<index_t>(kReductionBlock);
    const index_t nblocks = (n + block - 1) / block;
    std::vector<double> partial(static_cast<std::size_t>(nblocks));
#pragma omp parallel for schedule(static) if (nblocks > 1)
    for (index_t k = 0; k < nblocks; ++k) {
        double sum = 0.0;
        const index_t end = std::min(n, (k + 1) * block);
        for (index_t i = k * block; i < end; ++i) sum += std::norm(a[i]);
        partial[k] = sum;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace decohere::kernels::parallel
