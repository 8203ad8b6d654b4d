#include "decohere/state.hpp"

#include <cmath>
#include <string>

#include "decohere/errors.hpp"
#include "decohere/kernels.hpp"

namespace decohere {

namespace {

void check_sites(int num_sites) {
    if (num_sites < 1) throw DimensionError("state vector needs at least one environment site");
    if (num_sites > kMaxStateSites) {
        throw ResourceError("state vector with M = " + std::to_string(num_sites) +
                            " exceeds the 2^" + std::to_string(kMaxStateSites + 1) +
                            " amplitude guard");
    }
}

}  // namespace

StateVector::StateVector(int num_sites) : num_sites_(num_sites) {
    check_sites(num_sites);
    amp_.assign(2 * decohere::env_dim(num_sites), cplx{});
}

StateVector::StateVector(int num_sites, std::vector<cplx> amps) : num_sites_(num_sites), amp_(std::move(amps)) {
    check_sites(num_sites);
    if (amp_.size() != 2 * decohere::env_dim(num_sites)) {
        throw DimensionError("state vector length " + std::to_string(amp_.size()) + " does not match M = " +
                             std::to_string(num_sites));
    }
}

StateVector StateVector::basis(int num_sites, Pointer s, EnvConfig nu) {
    StateVector psi(num_sites);
    if (nu >= psi.env_dim()) throw DimensionError("environment configuration out of range");
    psi.at(s, nu) = 1.0;
    return psi;
}

double StateVector::norm() const { return std::sqrt(kernels::parallel::norm2(amp_)); }

cplx inner(const StateVector& a, const StateVector& b) {
    if (a.size() != b.size()) throw DimensionError("inner product of states with different dimensions");
    return kernels::parallel::dot(a.amps(), b.amps());
}

double fidelity(const StateVector& a, const StateVector& b) { return std::norm(inner(a, b)); }

StateVector product_state(cplx c1, cplx c2, std::span<const std::pair<cplx, cplx>> site_amps) {
    const int m = static_cast<int>(site_amps.size());
    StateVector psi(m);
    const std::size_t n = psi.env_dim();
    for (std::size_t nu = 0; nu < n; ++nu) {
        cplx env = 1.0;
        for (int l = 0; l < m; ++l) {
            env *= site_bit(nu, l) ? site_amps[l].second : site_amps[l].first;
        }
        psi.at(Pointer::First, nu) = c1 * env;
        psi.at(Pointer::Second, nu) = c2 * env;
    }
    return psi;
}

}  // namespace decohere
