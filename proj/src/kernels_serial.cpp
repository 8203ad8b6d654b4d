#include <cmath>

#include "decohere/kernels.hpp"

namespace decohere::kernels::serial {

void interaction_diag(int num_sites, std::span<const double> coupling, std::span<double> out) {
    const std::size_t n = env_dim(num_sites);
    for (std::size_t i = 0; i < 2 * n; ++i) {
        const std::size_t s = i / n;
        const std::size_t nu = i % n;
        double sum = 0.0;
        for (int l = 0; l < num_sites; ++l) sum += coupling[4 * l + 2 * s + site_bit(nu, l)];
        out[i] = sum;
    }
}

void apply_h(const HamiltonianTerms& h, HamiltonianPart part, std::span<const cplx> in, std::span<cplx> out) {
    const std::size_t n = env_dim(h.num_sites);
    const bool self = part != HamiltonianPart::InteractionOnly;
    const bool inter = part != HamiltonianPart::SelfOnly;
    for (std::size_t i = 0; i < 2 * n; ++i) {
        cplx acc{};
        if (self) {
            acc = h.tunneling * in[i ^ n];
            for (int l = 0; l < h.num_sites; ++l) acc += h.omega[l] * in[i ^ (std::size_t{1} << l)];
        }
        if (inter) acc += h.diag[i] * in[i];
        out[i] = acc;
    }
}

void rotate_sites(int num_sites, std::span<const double> angles, std::span<cplx> psi) {
    const std::size_t total = 2 * env_dim(num_sites);
    for (int l = 0; l < num_sites; ++l) {
        const double c = std::cos(angles[l]);
        const cplx mis(0.0, -std::sin(angles[l]));
        const std::size_t bit = std::size_t{1} << l;
        for (std::size_t i = 0; i < total; ++i) {
            if (i & bit) continue;
            const cplx x0 = psi[i];
            const cplx x1 = psi[i | bit];
            psi[i] = c * x0 + mis * x1;
            psi[i | bit] = mis * x0 + c * x1;
        }
    }
}

void rotate_system(int num_sites, double angle, std::span<cplx> psi) {
    const std::size_t n = env_dim(num_sites);
    const double c = std::cos(angle);
    const cplx mis(0.0, -std::sin(angle));
    for (std::size_t i = 0; i < n; ++i) {
        const cplx x0 = psi[i];
        const cplx x1 = psi[i + n];
        psi[i] = c * x0 + mis * x1;
        psi[i + n] = mis * x0 + c * x1;
    }
}

void axpy(std::span<cplx> out, std::span<const cplx> x, cplx alpha, std::span<const cplx> y) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + alpha * y[i];
}

void accumulate(std::span<cplx> acc, double weight, std::span<const cplx> y) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * y[i];
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
    cplx sum{};
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::conj(a[i]) * b[i];
    return sum;
}

double norm2(std::span<const cplx> a) {
    double sum = 0.0;
    for (const cplx& z : a) sum += std::norm(z);
    return sum;
}

}  // namespace decohere::kernels::serial
