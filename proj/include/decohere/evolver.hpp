#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "decohere/model.hpp"
#include "decohere/state.hpp"

namespace decohere {

/// Uniform grid t_k = t0 + k (t1 - t0) / n_steps, k = 0..n_steps. n_steps is
/// even so the same grid serves Simpson quadrature of branch phases.
class TimeGrid {
public:
    /// Throws std::invalid_argument unless t1 > t0 and n_steps is even and positive.
    TimeGrid(double t0, double t1, int n_steps);

    double t0() const noexcept { return t0_; }
    double t1() const noexcept { return t1_; }
    int n_steps() const noexcept { return n_steps_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_steps_) + 1; }
    double dt() const noexcept { return (t1_ - t0_) / n_steps_; }
    double time(std::size_t k) const;

    /// Grid index whose time equals t within 1e-12 relative; nullopt if t is off the grid.
    std::optional<std::size_t> index_of(double t) const;

private:
    double t0_;
    double t1_;
    int n_steps_;
};

enum class PropagationMethod { Rk4, Eig };

struct PropagateOptions {
    PropagationMethod method = PropagationMethod::Rk4;
    /// Upper bound on the rk4 sub-step; defaults to default_max_step(params).
    std::optional<double> max_step;
    /// Grid indices whose full state is kept in Trajectory::snapshots.
    std::vector<std::size_t> snapshot_indices;
    bool snapshot_all = false;
};

struct TrajectoryPoint {
    double t = 0.0;
    double norm = 0.0;
    double energy = 0.0;
    Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
    std::optional<cplx> r;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    std::map<std::size_t, StateVector> snapshots;
    std::size_t substeps_per_interval = 1;
};

/// 0.01 / energy_scale(); infinite when H = 0.
double default_max_step(const ModelParams& params);

/// Integrates i d/dt psi = H psi over the grid. The norm is monitored, never
/// renormalized; drift beyond 1e-6 throws NumericalGuardError.
Trajectory propagate(const StateVector& psi0, const ModelParams& params, const TimeGrid& grid,
                     const PropagateOptions& options = {});

/// rho_{ss'} = sum_nu amp(s, nu) conj(amp(s', nu)).
Eigen::Matrix2cd reduced_density(const StateVector& psi);

/// r = rho_12 / (|E_1| |E_2|), i.e. sum_nu amp(1,nu) conj(amp(2,nu)) normalized.
/// nullopt when either relative state has norm below 1e-12.
std::optional<cplx> decoherence_factor(const StateVector& psi);

/// Tr(rho Q). Throws std::invalid_argument if Q is not Hermitian.
double expectation_system_op(const StateVector& psi, const Eigen::Matrix2cd& q);

/// Columns t, norm, energy, re_rho11, re_rho22, re_rho12, im_rho12, re_r, im_r, abs_r.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace decohere
