#pragma once

#include <Eigen/Dense>

#include "decohere/model.hpp"
#include "decohere/state.hpp"

namespace decohere {

/// Dense 2^(M+1) x 2^(M+1) Hamiltonian, equal to the operator applied by apply_h.
/// Test oracle; throws ResourceError for M > kMaxDenseSites.
Eigen::MatrixXcd dense_h(const ModelParams& params);

/// Exact propagator from a full diagonalization of dense_h.
class SpectralPropagator {
public:
    explicit SpectralPropagator(const ModelParams& params);

    /// exp(-i H dt) psi.
    StateVector evolve(const StateVector& psi, double dt) const;

    const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

private:
    int num_sites_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXcd eigenvectors_;
};

}  // namespace decohere
