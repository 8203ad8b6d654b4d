#pragma once

// Interaction-picture branch states |nu(t)> = (c1|phi_1(t)> + c2|phi_2(t)>)|eps_nu(t)>
// and the diagonal approximation, in which every branch only picks up the
// phase exp(-i Lambda_nu(t)) with Lambda_nu the time integral of the branch's
// interaction energy.

#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "decohere/evolver.hpp"
#include "decohere/model.hpp"
#include "decohere/rng.hpp"
#include "decohere/state.hpp"

namespace decohere {

struct Branch {
    EnvConfig nu = 0;
    cplx c1{1.0, 0.0};
    cplx c2{};
    cplx alpha0{1.0, 0.0};
};

enum class EnsembleMode {
    BlochRandom,  ///< (c1, c2) drawn independently per nu, uniform on the Bloch sphere
    Product,      ///< one (c1, c2) shared by every branch
    Polarized,    ///< each branch is |phi_1> or |phi_2> with probability 1/2
};

struct EnsembleSpec {
    EnsembleMode mode = EnsembleMode::BlochRandom;
    /// Number of sampled configurations; nullopt means all 2^M when M <= kMaxFullEnsembleSites.
    std::optional<std::size_t> sample_size;
    /// Shared system state for Product mode; drawn from the Bloch sphere when absent.
    std::optional<std::pair<cplx, cplx>> product_amps;
};

inline constexpr int kMaxFullEnsembleSites = 14;
inline constexpr std::size_t kDefaultSampleSize = 4096;

/// Branches over distinct nu, sorted by nu, with sum |alpha0|^2 = 1.
class BranchEnsemble {
public:
    /// Sorts by nu and validates; throws std::invalid_argument on duplicate nu,
    /// unnormalized system amplitudes or unnormalized weights.
    BranchEnsemble(int num_sites, std::vector<Branch> branches, bool sampled);

    int num_sites() const noexcept { return num_sites_; }
    bool sampled() const noexcept { return sampled_; }
    std::size_t size() const noexcept { return branches_.size(); }
    const Branch& operator[](std::size_t i) const { return branches_[i]; }
    std::span<const Branch> branches() const noexcept { return branches_; }

    std::optional<std::size_t> find(EnvConfig nu) const;

private:
    int num_sites_;
    std::vector<Branch> branches_;
    bool sampled_;
};

/// Uniform weights 1/sqrt(K) over the included configurations.
BranchEnsemble make_ensemble(int num_sites, const EnsembleSpec& spec, const Rng& rng);

/// Pointer-basis amplitudes of c1|phi_1(t)> + c2|phi_2(t)>.
std::pair<cplx, cplx> system_amps(double t, double tunneling, cplx c1, cplx c2);

/// lambda_nu(t) = <nu(t)|h_I|nu(t)>, closed form.
double lambda_nu(const ModelParams& params, const Branch& branch, double t);

/// Entry l couples branch nu to nu with site l flipped:
///   <eps_nu(t)| <chi(t)| h_I |chi(t)> |eps_nu'(t)>,  chi = c1 phi_1 + c2 phi_2.
/// Equals i sin(w t) cos(w t) sum_i |a_i|^2 (v^l_{i,target} - v^l_{i,current}).
std::vector<cplx> offdiag_elements(const ModelParams& params, const Branch& branch, double t);

/// lambda, Lambda and alpha per branch and grid point. Storage is branch-major.
class PhaseRecordSet {
public:
    PhaseRecordSet(TimeGrid grid, std::size_t num_branches);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t num_branches() const noexcept { return num_branches_; }

    double lambda(std::size_t b, std::size_t k) const { return lambda_[slot(b, k)]; }
    double Lambda(std::size_t b, std::size_t k) const { return big_lambda_[slot(b, k)]; }
    cplx alpha(std::size_t b, std::size_t k) const { return alpha_[slot(b, k)]; }

    double& lambda(std::size_t b, std::size_t k) { return lambda_[slot(b, k)]; }
    double& Lambda(std::size_t b, std::size_t k) { return big_lambda_[slot(b, k)]; }
    cplx& alpha(std::size_t b, std::size_t k) { return alpha_[slot(b, k)]; }

private:
    std::size_t slot(std::size_t b, std::size_t k) const { return b * grid_.size() + k; }

    TimeGrid grid_;
    std::size_t num_branches_;
    std::vector<double> lambda_;
    std::vector<double> big_lambda_;
    std::vector<cplx> alpha_;
};

/// Lambda_nu by composite Simpson (lambda sampled at grid points and interval
/// midpoints; error O(dt^4)), alpha_nu(t) = alpha0 exp(-i Lambda_nu(t)).
PhaseRecordSet evolve_diagonal(const ModelParams& params, const BranchEnsemble& ensemble, const TimeGrid& grid);

/// sum_b weights[b] |nu_b(t)>, built with closed-form self-evolution.
StateVector branch_superposition(const ModelParams& params, const BranchEnsemble& ensemble, double t,
                                 std::span<const cplx> weights);

/// sum_nu alpha_nu(t) |nu(t)>. Throws std::invalid_argument when t is not a grid point.
StateVector assemble_state(const ModelParams& params, const BranchEnsemble& ensemble, const PhaseRecordSet& phases,
                           double t);

/// Columns nu, t, lambda, Lambda, re_alpha, im_alpha.
void write_phases_csv(std::ostream& os, const BranchEnsemble& ensemble, const PhaseRecordSet& phases);

}  // namespace decohere
