#include "decohere/evolver.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "decohere/csv.hpp"
#include "decohere/dense.hpp"
#include "decohere/errors.hpp"
#include "decohere/kernels.hpp"

namespace decohere {

namespace {

constexpr double kNormDriftAbort = 1e-6;
constexpr double kInitialNormTol = 1e-9;
constexpr double kRelativeStateFloor = 1e-12;

namespace par = kernels::parallel;

// Classical fixed-step RK4 for d/dt psi = -i H psi. Stage derivatives are
// stored as H psi; the -i factor is folded into the combination weights.
class Rk4Stepper {
public:
    explicit Rk4Stepper(const Hamiltonian& h)
        : h_(h), n_(2 * env_dim(h.params().num_sites())), stage_(n_), deriv_(n_), acc_(n_) {}

    void step(std::span<cplx> psi, double dt) {
        const cplx half(0.0, -0.5 * dt);
        const cplx full(0.0, -dt);

        h_.apply(psi, acc_);
        par::axpy(stage_, psi, half, acc_);
        h_.apply(stage_, deriv_);
        par::accumulate(acc_, 2.0, deriv_);
        par::axpy(stage_, psi, half, deriv_);
        h_.apply(stage_, deriv_);
        par::accumulate(acc_, 2.0, deriv_);
        par::axpy(stage_, psi, full, deriv_);
        h_.apply(stage_, deriv_);
        par::accumulate(acc_, 1.0, deriv_);
        par::axpy(psi, psi, cplx(0.0, -dt / 6.0), acc_);
    }

private:
    const Hamiltonian& h_;
    std::size_t n_;
    std::vector<cplx> stage_;
    std::vector<cplx> deriv_;
    std::vector<cplx> acc_;
};

TrajectoryPoint observe(double t, const StateVector& psi, const Hamiltonian& h) {
    TrajectoryPoint p;
    p.t = t;
    p.norm = psi.norm();
    p.energy = h.expectation(psi);
    p.rho = reduced_density(psi);
    p.r = decoherence_factor(psi);
    return p;
}

void check_norm(const TrajectoryPoint& p, double step) {
    const double drift = std::abs(p.norm - 1.0);
    if (!(drift <= kNormDriftAbort)) {
        std::ostringstream msg;
        msg << "norm drift " << drift << " at t = " << p.t << " exceeds " << kNormDriftAbort
            << "; step size too large (h = " << step << ")";
        throw NumericalGuardError(msg.str());
    }
}

}  // namespace

TimeGrid::TimeGrid(double t0, double t1, int n_steps) : t0_(t0), t1_(t1), n_steps_(n_steps) {
    if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0)) throw std::invalid_argument("time grid needs t1 > t0");
    if (n_steps <= 0 || n_steps % 2 != 0) throw std::invalid_argument("time grid needs an even, positive n_steps");
}

double TimeGrid::time(std::size_t k) const {
    if (k == static_cast<std::size_t>(n_steps_)) return t1_;
    return t0_ + (t1_ - t0_) * static_cast<double>(k) / n_steps_;
}

std::optional<std::size_t> TimeGrid::index_of(double t) const {
    const double pos = (t - t0_) / dt();
    const double k = std::round(pos);
    if (k < 0 || k > n_steps_) return std::nullopt;
    const auto idx = static_cast<std::size_t>(k);
    const double tol = 1e-12 * std::max({1.0, std::abs(t0_), std::abs(t1_)});
    if (std::abs(time(idx) - t) > tol) return std::nullopt;
    return idx;
}

double default_max_step(const ModelParams& params) {
    const double scale = params.energy_scale();
    return scale > 0.0 ? 0.01 / scale : std::numeric_limits<double>::infinity();
}

Trajectory propagate(const StateVector& psi0, const ModelParams& params, const TimeGrid& grid,
                     const PropagateOptions& options) {
    if (psi0.num_sites() != params.num_sites()) throw DimensionError("initial state has a different number of sites");
    if (std::abs(psi0.norm() - 1.0) > kInitialNormTol) throw std::invalid_argument("initial state is not normalized");

    const Hamiltonian h(params);
    Trajectory traj;
    traj.points.reserve(grid.size());

    auto wants_snapshot = [&](std::size_t k) {
        if (options.snapshot_all) return true;
        for (std::size_t s : options.snapshot_indices)
            if (s == k) return true;
        return false;
    };

    StateVector psi = psi0;
    traj.points.push_back(observe(grid.time(0), psi, h));
    if (wants_snapshot(0)) traj.snapshots.emplace(0, psi);

    if (options.method == PropagationMethod::Eig) {
        const SpectralPropagator prop(params);
        for (std::size_t k = 1; k < grid.size(); ++k) {
            psi = prop.evolve(psi0, grid.time(k) - grid.t0());
            traj.points.push_back(observe(grid.time(k), psi, h));
            check_norm(traj.points.back(), 0.0);
            if (wants_snapshot(k)) traj.snapshots.emplace(k, psi);
        }
        return traj;
    }

    const double max_step = options.max_step.value_or(default_max_step(params));
    if (!(max_step > 0.0)) throw std::invalid_argument("rk4 step bound must be positive");
    const double interval = grid.dt();
    const double ratio = interval / max_step;
    const auto substeps = static_cast<std::size_t>(std::max(1.0, std::ceil(ratio * (1.0 - 1e-12))));
    traj.substeps_per_interval = substeps;

    Rk4Stepper stepper(h);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double step = (grid.time(k) - grid.time(k - 1)) / static_cast<double>(substeps);
        for (std::size_t j = 0; j < substeps; ++j) stepper.step(psi.amps(), step);
        traj.points.push_back(observe(grid.time(k), psi, h));
        check_norm(traj.points.back(), step);
        if (wants_snapshot(k)) traj.snapshots.emplace(k, psi);
    }
    return traj;
}

Eigen::Matrix2cd reduced_density(const StateVector& psi) {
    const auto e1 = psi.env_block(Pointer::First);
    const auto e2 = psi.env_block(Pointer::Second);
    Eigen::Matrix2cd rho;
    rho(0, 0) = par::norm2(e1);
    rho(1, 1) = par::norm2(e2);
    rho(0, 1) = par::dot(e2, e1);  // sum amp(1) conj(amp(2))
    rho(1, 0) = std::conj(rho(0, 1));
    return rho;
}

std::optional<cplx> decoherence_factor(const StateVector& psi) {
    const Eigen::Matrix2cd rho = reduced_density(psi);
    const double n1 = std::sqrt(rho(0, 0).real());
    const double n2 = std::sqrt(rho(1, 1).real());
    if (n1 < kRelativeStateFloor || n2 < kRelativeStateFloor) return std::nullopt;
    return rho(0, 1) / (n1 * n2);
}

double expectation_system_op(const StateVector& psi, const Eigen::Matrix2cd& q) {
    if ((q - q.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw std::invalid_argument("system operator is not Hermitian");
    return (reduced_density(psi) * q).trace().real();
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    csv::write_header(os, {"t", "norm", "energy", "re_rho11", "re_rho22", "re_rho12", "im_rho12", "re_r", "im_r", "abs_r"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& p : traj.points) {
        const cplx r = p.r.value_or(cplx(nan, nan));
        csv::write_row(os, {csv::format(p.t), csv::format(p.norm), csv::format(p.energy),
                            csv::format(p.rho(0, 0).real()), csv::format(p.rho(1, 1).real()),
                            csv::format(p.rho(0, 1).real()), csv::format(p.rho(0, 1).imag()), csv::format(r.real()),
                            csv::format(r.imag()), csv::format(p.r ? std::abs(*p.r) : nan)});
    }
}

}  // namespace decohere
