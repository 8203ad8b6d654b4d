#include <doctest.h>

#include <cmath>

#include "decohere/dense.hpp"
#include "decohere/errors.hpp"
#include "decohere/evolver.hpp"
#include "support.hpp"

using namespace decohere;

namespace {

StateVector two_branch(int m, EnvConfig e1, EnvConfig e2) {
    StateVector psi(m);
    psi.at(Pointer::First, e1) = 1.0 / std::sqrt(2.0);
    psi.at(Pointer::Second, e2) = 1.0 / std::sqrt(2.0);
    return psi;
}

}  // namespace

TEST_CASE("time grid") {
    const TimeGrid g(0.0, 1.0, 10);
    CHECK(g.size() == 11);
    CHECK(g.time(10) == 1.0);
    CHECK(g.index_of(0.3) == 3);
    CHECK_FALSE(g.index_of(0.35).has_value());
    CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid(1.0, 1.0, 2), std::invalid_argument);
}

TEST_CASE("free rotation over a quarter period") {
    // Each factor picks up -i: (-i)(-i) = -1 on |phi_2>|down>.
    const auto p = oracle::make_params(1, 1.0, {1.0}, {SiteCoupling{}});
    const auto traj = propagate(StateVector::basis(1, Pointer::First, 0), p, TimeGrid(0.0, M_PI / 2, 2),
                                {.snapshot_indices = {2}});
    const auto& psi = traj.snapshots.at(2);
    StateVector expect(1);
    expect.at(Pointer::Second, 1) = -1.0;
    CHECK(oracle::max_abs_diff(psi, expect) < 1e-8);
}

TEST_CASE("reduced density examples") {
    const auto prod = StateVector::basis(2, Pointer::First, 1);
    const auto rho = reduced_density(prod);
    CHECK(std::abs(rho(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(rho(1, 1)) < 1e-15);

    const auto mixed = reduced_density(two_branch(2, 0, 3));
    CHECK(std::abs(rho(0, 1)) < 1e-15);
    CHECK(std::abs(mixed(0, 0) - 0.5) < 1e-15);
    CHECK(std::abs(mixed(1, 1) - 0.5) < 1e-15);
    CHECK(std::abs(mixed(0, 1)) < 1e-15);

    const auto coherent = reduced_density(two_branch(2, 2, 2));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::abs(coherent(i, j) - 0.5) < 1e-15);
}

TEST_CASE("decoherence factor examples") {
    CHECK(std::abs(*decoherence_factor(two_branch(3, 5, 5)) - 1.0) < 1e-15);
    CHECK(std::abs(*decoherence_factor(two_branch(3, 5, 6))) < 1e-15);
    CHECK_FALSE(decoherence_factor(StateVector::basis(3, Pointer::First, 1)).has_value());
}

TEST_CASE("system operator expectations") {
    Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    Eigen::Matrix2cd p1 = Eigen::Matrix2cd::Zero();
    p1(0, 0) = 1.0;
    Eigen::Matrix2cd cross;
    cross << 0, 1, 1, 0;
    const auto psi = oracle::random_state(1, 4);
    CHECK(expectation_system_op(psi, id) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(expectation_system_op(StateVector::basis(2, Pointer::Second, 0), p1) == 0.0);
    CHECK(std::abs(expectation_system_op(two_branch(2, 0, 3), cross)) < 1e-15);
    CHECK(expectation_system_op(two_branch(2, 1, 1), cross) == doctest::Approx(1.0));
    Eigen::Matrix2cd bad = Eigen::Matrix2cd::Zero();
    bad(0, 1) = 1.0;
    CHECK_THROWS_AS(expectation_system_op(psi, bad), std::invalid_argument);
}

TEST_CASE("norm and energy are conserved with the default step") {
    const auto p = sample_params(21, 8, {.coupling = 0.2});
    const auto traj = propagate(oracle::random_state(22, 8), p, TimeGrid(0.0, 10.0, 40));
    const double e0 = traj.points.front().energy;
    for (const auto& pt : traj.points) {
        CHECK(std::abs(pt.norm - 1.0) < 1e-9);
        CHECK(std::abs(pt.energy - e0) / std::max(1.0, std::abs(e0)) < 1e-8);
    }
    CHECK(traj.substeps_per_interval == static_cast<std::size_t>(std::ceil(0.25 / default_max_step(p))));
}

TEST_CASE("self-only propagation is a product of single-qubit rotations") {
    auto desc = oracle::random_params(23, 5).describe();
    for (auto& v : desc.coupling) v = SiteCoupling{};
    const auto p = build_params(desc);
    const TimeGrid grid(0.0, 4.0, 8);
    const cplx c1(0.6, 0.0), c2(0.0, 0.8);
    // A single configuration branch evolves exactly as its closed-form self-evolution.
    const auto psi0 = oracle::branch_vector(p, c1, c2, 0b10110, 0.0);
    PropagateOptions opts;
    opts.snapshot_all = true;
    const auto traj = propagate(psi0, p, grid, opts);
    for (std::size_t k = 0; k < grid.size(); ++k)
        CHECK(oracle::max_abs_diff(traj.snapshots.at(k), oracle::branch_vector(p, c1, c2, 0b10110, grid.time(k))) < 1e-8);
}

TEST_CASE("rk4 agrees with the spectral propagator") {
    for (int m : {2, 4, 6}) {
        CAPTURE(m);
        const auto p = oracle::random_params(30 + m, m);
        const TimeGrid grid(0.0, 10.0, 20);
        const auto psi0 = oracle::random_state(40 + m, m);
        PropagateOptions opts;
        opts.snapshot_all = true;
        const auto rk = propagate(psi0, p, grid, opts);
        opts.method = PropagationMethod::Eig;
        const auto eig = propagate(psi0, p, grid, opts);
        for (std::size_t k = 0; k < grid.size(); ++k)
            CHECK(fidelity(rk.snapshots.at(k), eig.snapshots.at(k)) >= 1.0 - 1e-8);
    }
}

TEST_CASE("spectral propagator reproduces H psi to first order") {
    const auto p = oracle::random_params(50, 3);
    const SpectralPropagator prop(p);
    const auto psi = oracle::random_state(51, 3);
    const double dt = 1e-6;
    const auto fwd = prop.evolve(psi, dt);
    const auto hpsi = apply_h(p, psi);
    double err = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i)
        err = std::max(err, std::abs((fwd[i] - psi[i]) / dt - (-oracle::I) * hpsi[i]));
    CHECK(err < 1e-5);
}

TEST_CASE("rho_12 equals |E1||E2| r") {
    const auto p = oracle::random_params(60, 6);
    const auto traj = propagate(oracle::random_state(61, 6), p, TimeGrid(0.0, 3.0, 6), {.snapshot_all = true});
    for (std::size_t k = 0; k < traj.points.size(); ++k) {
        const auto& pt = traj.points[k];
        REQUIRE(pt.r.has_value());
        const double n1 = std::sqrt(pt.rho(0, 0).real()), n2 = std::sqrt(pt.rho(1, 1).real());
        CHECK(std::abs(pt.rho(0, 1) - n1 * n2 * *pt.r) < 1e-12);
    }
}

TEST_CASE("zero Hamiltonian leaves the state untouched") {
    const auto p = oracle::make_params(3, 0.0, {0, 0, 0}, std::vector<SiteCoupling>(3));
    const auto psi0 = oracle::random_state(70, 3);
    const auto traj = propagate(psi0, p, TimeGrid(0.0, 5.0, 10), {.snapshot_indices = {10}});
    CHECK(oracle::max_abs_diff(traj.snapshots.at(10), psi0) == 0.0);
    for (const auto& pt : traj.points) CHECK(*pt.r == *traj.points.front().r);
}

TEST_CASE("norm drift aborts") {
    const auto p = sample_params(80, 6, {.coupling = 1.0});
    PropagateOptions opts;
    opts.max_step = 2.0;
    CHECK_THROWS_AS(propagate(oracle::random_state(81, 6), p, TimeGrid(0.0, 40.0, 20), opts), NumericalGuardError);
}

TEST_CASE("precondition errors") {
    const auto p = oracle::random_params(90, 3);
    CHECK_THROWS_AS(propagate(StateVector::basis(2, Pointer::First, 0), p, TimeGrid(0, 1, 2)), DimensionError);
    StateVector unnormalized(3);
    unnormalized[0] = 2.0;
    CHECK_THROWS_AS(propagate(unnormalized, p, TimeGrid(0, 1, 2)), std::invalid_argument);
}
