#include <benchmark/benchmark.h>

#include <vector>

#include "decohere/kernels.hpp"
#include "decohere/rng.hpp"

namespace {

using namespace decohere;

struct Fixture {
    explicit Fixture(int m) : num_sites(m), psi(std::size_t{2} << m), out(psi.size()), diag(psi.size()) {
        Rng rng(7);
        for (auto& a : psi) a = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        omega.resize(m);
        for (auto& w : omega) w = rng.uniform(0.5, 1.5);
        coupling.resize(4 * static_cast<std::size_t>(m));
        for (auto& v : coupling) v = rng.uniform(-0.1, 0.1);
        kernels::serial::interaction_diag(m, coupling, diag);
    }

    kernels::HamiltonianTerms terms() const { return {num_sites, 1.0, omega, diag}; }

    int num_sites;
    std::vector<cplx> psi, out;
    std::vector<double> diag, omega, coupling;
};

template <bool Parallel>
void BM_apply_h(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    const auto h = f.terms();
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::apply_h(h, HamiltonianPart::Full, f.psi, f.out);
        else
            kernels::serial::apply_h(h, HamiltonianPart::Full, f.psi, f.out);
        benchmark::DoNotOptimize(f.out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.psi.size()));
}

template <bool Parallel>
void BM_rotate_sites(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::rotate_sites(f.num_sites, f.omega, f.psi);
        else
            kernels::serial::rotate_sites(f.num_sites, f.omega, f.psi);
        benchmark::DoNotOptimize(f.psi.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.psi.size()));
}

template <bool Parallel>
void BM_dot(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        cplx d = Parallel ? kernels::parallel::dot(f.psi, f.out) : kernels::serial::dot(f.psi, f.out);
        benchmark::DoNotOptimize(d);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.psi.size()));
}

}  // namespace

BENCHMARK(BM_apply_h<false>)->DenseRange(10, 16, 2);
BENCHMARK(BM_apply_h<true>)->DenseRange(10, 16, 2);
BENCHMARK(BM_rotate_sites<false>)->DenseRange(10, 16, 2);
BENCHMARK(BM_rotate_sites<true>)->DenseRange(10, 16, 2);
BENCHMARK(BM_dot<false>)->DenseRange(10, 16, 2);
BENCHMARK(BM_dot<true>)->DenseRange(10, 16, 2);

BENCHMARK_MAIN();
