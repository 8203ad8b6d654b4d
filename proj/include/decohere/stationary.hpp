#pragma once

// Discrete stationary-phase selection over the branch landscape {Lambda_nu(t)}.
// Stationarity on the label set is read as extremality against all in-set
// single-spin-flip neighbors, the transitions h_I connects.

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "decohere/branch.hpp"
#include "decohere/evolver.hpp"
#include "decohere/model.hpp"

namespace decohere {

struct LandscapeEntry {
    EnvConfig nu = 0;
    double Lambda = 0.0;
    cplx alpha{};
    cplx c1{};
    cplx c2{};
};

class Landscape {
public:
    /// Sorts by nu; throws std::invalid_argument on duplicates, non-finite Lambda or nu >= 2^M.
    Landscape(int num_sites, double t, std::vector<LandscapeEntry> entries);

    int num_sites() const noexcept { return num_sites_; }
    double t() const noexcept { return t_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const LandscapeEntry& operator[](std::size_t i) const { return entries_[i]; }
    std::span<const LandscapeEntry> entries() const noexcept { return entries_; }

    std::optional<std::size_t> find(EnvConfig nu) const;
    /// Indices of in-set entries at Hamming distance 1.
    std::vector<std::size_t> neighbors(std::size_t i) const;
    /// Indices of in-set entries at Hamming distance 1..radius.
    std::vector<std::size_t> ball(std::size_t i, int radius) const;

private:
    int num_sites_;
    double t_;
    std::vector<LandscapeEntry> entries_;
};

/// Landscape at grid index k of a phase record.
Landscape build_landscape(const BranchEnsemble& ensemble, const PhaseRecordSet& phases, std::size_t k);

struct SelectionResult {
    std::vector<EnvConfig> minima;
    std::vector<EnvConfig> maxima;
    /// Connected groups (>= 2 entries) of neighbors whose Lambda agree within tol.
    std::vector<std::vector<EnvConfig>> plateaus;
    /// (sum w)^2 / sum w^2 over survival weights; NaN if every weight is zero.
    double participation_ratio = 0.0;
};

/// 1e-12 * max |Lambda|.
double default_selection_tol(const Landscape& landscape);

/// Strict Hamming-1 extrema. Entries without in-set neighbors are neither.
/// Throws std::invalid_argument on an empty landscape.
SelectionResult select_extremal(const Landscape& landscape, std::optional<double> tol = std::nullopt);

/// Minima and maxima; when there are none, the plateau members instead.
std::vector<EnvConfig> selected_configs(const SelectionResult& selection);

/// weight(nu) = |sum_ball alpha e^{-i Lambda}| / sum_ball |alpha| over nu and its
/// in-set neighbors up to Hamming distance `radius`. The landscape alphas already
/// carry the phase e^{-i Lambda}.
std::vector<double> survival_weights(const Landscape& landscape, int radius = 1);

double participation_ratio(std::span<const double> weights);

/// Columns nu, Lambda, weight, is_min, is_max, plateau_id (-1 outside plateaus).
void write_landscape_csv(std::ostream& os, const Landscape& landscape, const SelectionResult& selection,
                         std::span<const double> weights);
nlohmann::json selection_json(const SelectionResult& selection);

struct TwoBranchResult {
    bool has_structure = false;
    std::string diagnostic;
    double alpha1 = 0.0;   ///< norm of the phi_1 group
    double Lambda1 = 0.0;  ///< weight-averaged Lambda of the phi_1 group
    double alpha2 = 0.0;
    double Lambda2 = 0.0;
    std::optional<cplx> r_pred;
    std::size_t excluded = 0;  ///< branches with |c1|^2 within 1e-9 of 1/2
};

/// Splits (surviving) branches into a phi_1 group (|c1|^2 >= 1/2) and a phi_2
/// group, sums each coherently into one environment vector and predicts the
/// decoherence factor as their normalized overlap. Requires a polarized
/// ensemble (every branch within `polarization_tol` of a pointer state);
/// otherwise, or with fewer than two non-empty groups, has_structure is false.
TwoBranchResult reconstruct_two_branch(const ModelParams& params, const BranchEnsemble& ensemble,
                                       const PhaseRecordSet& phases, double t,
                                       std::optional<std::span<const EnvConfig>> surviving = std::nullopt,
                                       double polarization_tol = 1e-9);

struct NoticeReport {
    bool degenerate = false;
    std::size_t num_selected = 0;
    /// max over selected nu of 1 - |<chi_nu|chi_ref>|^2
    double selected_state_deviation = 0.0;
    bool selected_states_identical = false;
    /// population variance of |c1|^2 over the selected branches
    double c1_dispersion = 0.0;
    std::string message;
};

/// Checks whether every branch carries the same system state up to phase
/// (product initial state), in which case selection over nu cannot pick out
/// system states.
NoticeReport notice_check(const BranchEnsemble& ensemble, const PhaseRecordSet& phases, double t, double tol = 1e-10);
nlohmann::json notice_json(const NoticeReport& report);

/// Exact decoherence factor in the pure-dephasing limit (E = 0, omega = 0) for
/// the product state (c1 phi_1 + c2 phi_2) prod_l (a_l up + b_l down):
///   r(t) = e^{i arg(c1 c2*)} prod_l (|a_l|^2 e^{-i(v1up - v2up) t} + |b_l|^2 e^{-i(v1down - v2down) t}).
/// Throws std::invalid_argument outside that limit. nullopt where r is undefined (c1 or c2 = 0).
std::vector<std::optional<cplx>> dephasing_closed_form(const ModelParams& params, cplx c1, cplx c2,
                                                       std::span<const std::pair<cplx, cplx>> site_amps,
                                                       const TimeGrid& grid);

}  // namespace decohere
