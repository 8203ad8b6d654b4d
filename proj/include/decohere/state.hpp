#pragma once

#include <span>
#include <vector>

#include "decohere/types.hpp"

namespace decohere {

/// Full system (x) environment state. Global index = s * 2^M + nu, so the
/// system bit is the most significant and site l = 1 is bit 0.
class StateVector {
public:
    StateVector() = default;

    /// Zero vector for M sites. Throws ResourceError above kMaxStateSites.
    explicit StateVector(int num_sites);
    StateVector(int num_sites, std::vector<cplx> amps);

    static StateVector basis(int num_sites, Pointer s, EnvConfig nu);

    int num_sites() const noexcept { return num_sites_; }
    std::size_t size() const noexcept { return amp_.size(); }
    std::size_t env_dim() const noexcept { return amp_.size() / 2; }

    cplx& operator[](std::size_t i) { return amp_[i]; }
    const cplx& operator[](std::size_t i) const { return amp_[i]; }

    cplx& at(Pointer s, EnvConfig nu) { return amp_[index(s, nu)]; }
    const cplx& at(Pointer s, EnvConfig nu) const { return amp_[index(s, nu)]; }

    std::span<cplx> amps() noexcept { return amp_; }
    std::span<const cplx> amps() const noexcept { return amp_; }

    /// Unnormalized environment vector correlated with pointer state s.
    std::span<const cplx> env_block(Pointer s) const {
        return std::span<const cplx>(amp_).subspan(static_cast<std::size_t>(s) * env_dim(), env_dim());
    }

    double norm() const;

private:
    std::size_t index(Pointer s, EnvConfig nu) const {
        return static_cast<std::size_t>(s) * env_dim() + static_cast<std::size_t>(nu);
    }

    int num_sites_ = 0;
    std::vector<cplx> amp_;
};

/// <a|b>, antilinear in the first argument.
cplx inner(const StateVector& a, const StateVector& b);

/// |<a|b>|^2. Throws DimensionError on mismatched sizes.
double fidelity(const StateVector& a, const StateVector& b);

/// (c1|phi_1> + c2|phi_2>) (x) prod_l (a_l|up> + b_l|down>).
StateVector product_state(cplx c1, cplx c2, std::span<const std::pair<cplx, cplx>> site_amps);

}  // namespace decohere
