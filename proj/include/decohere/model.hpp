#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "decohere/state.hpp"
#include "decohere/types.hpp"

namespace decohere {

/// Distribution used by sample_params. omega_l ~ U[omega_min, omega_max],
/// v^l_{i,sigma} = g * U[-1, 1] + v_shift; E is fixed, not sampled.
struct SamplingSpec {
    double tunneling = 1.0;
    double omega_min = 0.5;
    double omega_max = 1.5;
    double coupling = 0.1;
    double v_shift = 0.0;

    double mean_omega() const { return 0.5 * (omega_min + omega_max); }
    friend bool operator==(const SamplingSpec&, const SamplingSpec&) = default;
};

/// Coupling of one site: v[i][sigma], i = pointer index, sigma = 0 (up) / 1 (down).
using SiteCoupling = std::array<std::array<double, 2>, 2>;

/// Unvalidated parameter description, as read from a config or built by hand.
struct ModelDescription {
    int num_sites = 0;
    double tunneling = 0.0;
    std::vector<double> omega;
    std::vector<SiteCoupling> coupling;
    std::optional<std::uint64_t> seed;
    std::optional<SamplingSpec> dist;
};

/// Validated, immutable Hamiltonian coefficients (hbar = 1).
class ModelParams {
public:
    int num_sites() const noexcept { return num_sites_; }
    double tunneling() const noexcept { return tunneling_; }
    double omega(int site) const { return omega_[site]; }
    std::span<const double> omegas() const noexcept { return omega_; }
    double coupling(int site, Pointer s, int sigma) const {
        return coupling_[4 * site + 2 * static_cast<int>(s) + sigma];
    }
    /// Flattened [l][i][sigma].
    std::span<const double> couplings() const noexcept { return coupling_; }

    const std::optional<std::uint64_t>& seed() const noexcept { return seed_; }
    const std::optional<SamplingSpec>& dist() const noexcept { return dist_; }

    /// |E| + sum_l (|omega_l| + max_{i,sigma} |v^l_{i,sigma}|); bounds the spectral radius.
    double energy_scale() const;

    /// E = 0 and omega = 0: the interaction Hamiltonian is the whole Hamiltonian.
    bool is_pure_dephasing() const;

    ModelDescription describe() const;

private:
    friend ModelParams build_params(const ModelDescription&);

    int num_sites_ = 0;
    double tunneling_ = 0.0;
    std::vector<double> omega_;
    std::vector<double> coupling_;
    std::optional<std::uint64_t> seed_;
    std::optional<SamplingSpec> dist_;
};

/// Validates lengths and finiteness. Throws DimensionError / NonFiniteError.
ModelParams build_params(const ModelDescription& desc);

/// Deterministic in (seed, M, dist).
ModelParams sample_params(std::uint64_t seed, int num_sites, const SamplingSpec& dist = {});

/// Diagonal element of h_I on |phi_s>|eps_nu>: sum_l v^l_{s, sigma_l(nu)}.
double h_I_diag(const ModelParams& params, Pointer s, EnvConfig nu);

/// Matrix-free Hamiltonian with the interaction diagonal precomputed once.
class Hamiltonian {
public:
    explicit Hamiltonian(const ModelParams& params);

    const ModelParams& params() const noexcept { return params_; }
    std::span<const double> diagonal() const noexcept { return diag_; }

    /// out = H_part * in. Both spans must have length 2^(M+1).
    void apply(std::span<const cplx> in, std::span<cplx> out, HamiltonianPart part = HamiltonianPart::Full) const;

    StateVector apply(const StateVector& psi, HamiltonianPart part = HamiltonianPart::Full) const;

    /// Re <psi|H|psi>.
    double expectation(const StateVector& psi) const;

private:
    ModelParams params_;
    std::vector<double> diag_;
};

/// H_part * psi without materializing a matrix, O(M 2^M).
StateVector apply_h(const ModelParams& params, const StateVector& psi, HamiltonianPart part = HamiltonianPart::Full);

void to_json(nlohmann::json& j, const SamplingSpec& spec);
void from_json(const nlohmann::json& j, SamplingSpec& spec);
nlohmann::json params_to_json(const ModelParams& params);
/// Throws ConfigError with a field path on schema violations.
ModelParams params_from_json(const nlohmann::json& j);

}  // namespace decohere
