#include <doctest.h>

#include <vector>

#include "decohere/kernels.hpp"
#include "decohere/rng.hpp"

using namespace decohere;
namespace ks = kernels::serial;
namespace kp = kernels::parallel;

namespace {

struct Case {
    explicit Case(int m, std::uint64_t seed) : num_sites(m), psi(std::size_t{2} << m), other(psi.size()) {
        Rng rng(seed);
        for (auto& a : psi) a = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        for (auto& a : other) a = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        omega.resize(m);
        for (auto& w : omega) w = rng.uniform(0.2, 2.0);
        coupling.resize(4 * static_cast<std::size_t>(m));
        for (auto& v : coupling) v = rng.uniform(-0.5, 0.5);
    }
    int num_sites;
    std::vector<cplx> psi, other;
    std::vector<double> omega, coupling;
};

}  // namespace

TEST_CASE("serial and parallel kernels agree bit for bit") {
    // 13 sites crosses the size at which the parallel loops actually fork.
    for (int m : {1, 3, 7, 11, 13}) {
        CAPTURE(m);
        Case c(m, 100 + m);
        const std::size_t n = c.psi.size();

        std::vector<double> ds(n), dp(n);
        ks::interaction_diag(m, c.coupling, ds);
        kp::interaction_diag(m, c.coupling, dp);
        CHECK(ds == dp);

        const kernels::HamiltonianTerms h{m, 0.7, c.omega, ds};
        for (auto part : {HamiltonianPart::Full, HamiltonianPart::SelfOnly, HamiltonianPart::InteractionOnly}) {
            std::vector<cplx> os(n), op(n);
            ks::apply_h(h, part, c.psi, os);
            kp::apply_h(h, part, c.psi, op);
            CHECK(os == op);
        }

        auto rs = c.psi, rp = c.psi;
        ks::rotate_sites(m, c.omega, rs);
        kp::rotate_sites(m, c.omega, rp);
        CHECK(rs == rp);
        ks::rotate_system(m, 0.37, rs);
        kp::rotate_system(m, 0.37, rp);
        CHECK(rs == rp);

        std::vector<cplx> as(n), ap(n);
        ks::axpy(as, c.psi, {0.3, -0.2}, c.other);
        kp::axpy(ap, c.psi, {0.3, -0.2}, c.other);
        CHECK(as == ap);
        ks::accumulate(as, 0.125, c.other);
        kp::accumulate(ap, 0.125, c.other);
        CHECK(as == ap);

        const cplx d1 = ks::dot(c.psi, c.other), d2 = kp::dot(c.psi, c.other);
        CHECK(std::abs(d1 - d2) <= 1e-12 * (1.0 + std::abs(d1)));
        const double n1 = ks::norm2(c.psi), n2 = kp::norm2(c.psi);
        CHECK(std::abs(n1 - n2) <= 1e-12 * n1);
    }
}

TEST_CASE("axpy allows the output to alias x") {
    Case c(4, 9);
    std::vector<cplx> expect(c.psi.size());
    kp::axpy(expect, c.psi, 2.0, c.other);
    auto inplace = c.psi;
    kp::axpy(inplace, inplace, 2.0, c.other);
    CHECK(inplace == expect);
}

TEST_CASE("full Hamiltonian is self plus interaction exactly") {
    Case c(9, 3);
    std::vector<double> diag(c.psi.size());
    kp::interaction_diag(9, c.coupling, diag);
    const kernels::HamiltonianTerms h{9, 1.1, c.omega, diag};
    std::vector<cplx> full(c.psi.size()), self(c.psi.size()), inter(c.psi.size());
    kp::apply_h(h, HamiltonianPart::Full, c.psi, full);
    kp::apply_h(h, HamiltonianPart::SelfOnly, c.psi, self);
    kp::apply_h(h, HamiltonianPart::InteractionOnly, c.psi, inter);
    for (std::size_t i = 0; i < full.size(); ++i) CHECK(full[i] == self[i] + inter[i]);
}

TEST_CASE("rotations are unitary and compose additively") {
    Case c(6, 4);
    auto psi = c.psi;
    const double before = ks::norm2(psi);
    std::vector<double> half(c.omega.size());
    for (std::size_t l = 0; l < half.size(); ++l) half[l] = 0.5 * c.omega[l];
    kp::rotate_sites(6, half, psi);
    kp::rotate_sites(6, half, psi);
    CHECK(ks::norm2(psi) == doctest::Approx(before).epsilon(1e-13));
    auto once = c.psi;
    kp::rotate_sites(6, c.omega, once);
    for (std::size_t i = 0; i < psi.size(); ++i) CHECK(std::abs(psi[i] - once[i]) < 1e-13);
}
