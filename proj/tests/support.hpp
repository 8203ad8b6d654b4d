#pragma once

// Independent oracles for the tests. Nothing here calls the library kernels:
// states and operators are built from explicit Kronecker products.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "decohere/model.hpp"
#include "decohere/rng.hpp"
#include "decohere/state.hpp"

namespace oracle {

using decohere::cplx;
using decohere::ModelParams;
using decohere::Pointer;
using decohere::StateVector;

inline constexpr cplx I{0.0, 1.0};

inline ModelParams make_params(int m, double e, std::vector<double> omega, std::vector<decohere::SiteCoupling> v) {
    decohere::ModelDescription d;
    d.num_sites = m;
    d.tunneling = e;
    d.omega = std::move(omega);
    d.coupling = std::move(v);
    return decohere::build_params(d);
}

inline ModelParams random_params(std::uint64_t seed, int m, double g = 0.3, double e = 0.8) {
    decohere::Rng rng(seed);
    std::vector<double> omega(m);
    std::vector<decohere::SiteCoupling> v(m);
    for (int l = 0; l < m; ++l) {
        omega[l] = rng.uniform(0.3, 1.7);
        for (auto& row : v[l])
            for (auto& x : row) x = rng.uniform(-g, g);
    }
    return make_params(m, e, omega, v);
}

inline StateVector random_state(std::uint64_t seed, int m) {
    decohere::Rng rng(seed);
    std::vector<cplx> a(std::size_t{2} << m);
    double n = 0.0;
    for (auto& x : a) {
        // Box-Muller gives a Haar-distributed direction after normalization.
        const double r = std::sqrt(-2.0 * std::log(1.0 - rng.uniform()));
        const double phi = 2.0 * M_PI * rng.uniform();
        x = {r * std::cos(phi), r * std::sin(phi)};
        n += std::norm(x);
    }
    for (auto& x : a) x /= std::sqrt(n);
    return StateVector(m, std::move(a));
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Operator acting as `op` on one tensor factor. Factors are ordered most
/// significant first: system, site M, ..., site 1.
inline Eigen::MatrixXcd embed(int m, int factor, const Eigen::MatrixXcd& op) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int f = 0; f <= m; ++f) out = kron(out, f == factor ? op : Eigen::MatrixXcd::Identity(2, 2));
    return out;
}

inline Eigen::MatrixXcd kron_hamiltonian(const ModelParams& p) {
    const int m = p.num_sites();
    Eigen::MatrixXcd sx(2, 2);
    sx << 0, 1, 1, 0;
    Eigen::MatrixXcd h = p.tunneling() * embed(m, 0, sx);
    for (int l = 0; l < m; ++l) {
        h += p.omega(l) * embed(m, m - l, sx);
        for (int s = 0; s < 2; ++s) {
            Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(2, 2);
            proj(s, s) = 1.0;
            Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(2, 2);
            v(0, 0) = p.coupling(l, Pointer(s), 0);
            v(1, 1) = p.coupling(l, Pointer(s), 1);
            h += embed(m, 0, proj) * embed(m, m - l, v);
        }
    }
    return h;
}

inline Eigen::VectorXcd to_eigen(const StateVector& psi) {
    Eigen::VectorXcd v(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) v[i] = psi[i];
    return v;
}

/// h_I psi written out term by term.
inline StateVector apply_interaction(const ModelParams& p, const StateVector& psi) {
    const int m = p.num_sites();
    StateVector out(m);
    for (int s = 0; s < 2; ++s)
        for (std::uint64_t nu = 0; nu < (1ULL << m); ++nu) {
            double e = 0.0;
            for (int l = 0; l < m; ++l) e += p.coupling(l, Pointer(s), (nu >> l) & 1U);
            out.at(Pointer(s), nu) = e * psi.at(Pointer(s), nu);
        }
    return out;
}

/// Self-evolved single-qubit state: |0(t)> = cos|0> - i sin|1>, |1(t)> = cos|1> - i sin|0>.
inline std::pair<cplx, cplx> rotated(int bit, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return bit == 0 ? std::pair<cplx, cplx>{c, -I * s} : std::pair<cplx, cplx>{-I * s, c};
}

/// (c1 |phi_1(t)> + c2 |phi_2(t)>) (x) prod_l |sigma_l(t)>, each factor evolved with its own
/// self-Hamiltonian.
inline StateVector branch_vector(const ModelParams& p, cplx c1, cplx c2, std::uint64_t nu, double t) {
    const int m = p.num_sites();
    const auto [p10, p11] = rotated(0, p.tunneling() * t);
    const auto [p20, p21] = rotated(1, p.tunneling() * t);
    const cplx sys[2] = {c1 * p10 + c2 * p20, c1 * p11 + c2 * p21};
    std::vector<std::pair<cplx, cplx>> sites;
    for (int l = 0; l < m; ++l) sites.push_back(rotated((nu >> l) & 1U, p.omega(l) * t));
    StateVector out(m);
    for (int s = 0; s < 2; ++s)
        for (std::uint64_t mu = 0; mu < (1ULL << m); ++mu) {
            cplx a = sys[s];
            for (int l = 0; l < m; ++l) a *= ((mu >> l) & 1U) ? sites[l].second : sites[l].first;
            out.at(Pointer(s), mu) = a;
        }
    return out;
}

inline cplx braket(const StateVector& a, const StateVector& b) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

inline double max_abs_diff(const StateVector& a, const StateVector& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace oracle
