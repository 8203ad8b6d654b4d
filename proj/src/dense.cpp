#include "decohere/dense.hpp"

#include <string>

#include "decohere/errors.hpp"
#include "decohere/kernels.hpp"

namespace decohere {

Eigen::MatrixXcd dense_h(const ModelParams& params) {
    const int m = params.num_sites();
    if (m > kMaxDenseSites) {
        throw ResourceError("dense Hamiltonian limited to M <= " + std::to_string(kMaxDenseSites) + ", got " +
                            std::to_string(m));
    }
    const auto n = static_cast<Eigen::Index>(env_dim(m));
    std::vector<double> diag(2 * n);
    kernels::serial::interaction_diag(m, params.couplings(), diag);

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        h(i, i) = diag[i];
        h(i, i ^ n) += params.tunneling();
        for (int l = 0; l < m; ++l) h(i, i ^ (Eigen::Index{1} << l)) += params.omega(l);
    }
    return h;
}

SpectralPropagator::SpectralPropagator(const ModelParams& params) : num_sites_(params.num_sites()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(dense_h(params));
    if (solver.info() != Eigen::Success) throw std::runtime_error("dense eigendecomposition failed");
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
}

StateVector SpectralPropagator::evolve(const StateVector& psi, double dt) const {
    if (psi.num_sites() != num_sites_) throw DimensionError("state has a different number of sites");
    const Eigen::Map<const Eigen::VectorXcd> in(psi.amps().data(), static_cast<Eigen::Index>(psi.size()));
    Eigen::VectorXcd coeff = eigenvectors_.adjoint() * in;
    for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff[k] *= std::polar(1.0, -eigenvalues_[k] * dt);
    const Eigen::VectorXcd out = eigenvectors_ * coeff;
    return StateVector(num_sites_, std::vector<cplx>(out.data(), out.data() + out.size()));
}

}  // namespace decohere
