#include "decohere/branch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "closed_form.hpp"
#include "decohere/csv.hpp"
#include "decohere/errors.hpp"
#include "decohere/kernels.hpp"

namespace decohere {

namespace {

constexpr double kUnitTol = 1e-12;

}  // namespace

BranchEnsemble::BranchEnsemble(int num_sites, std::vector<Branch> branches, bool sampled)
    : num_sites_(num_sites), branches_(std::move(branches)), sampled_(sampled) {
    if (num_sites < 1 || num_sites > 63) throw std::invalid_argument("ensemble needs 1 <= M <= 63");
    if (branches_.empty()) throw std::invalid_argument("ensemble is empty");
    std::sort(branches_.begin(), branches_.end(), [](const Branch& a, const Branch& b) { return a.nu < b.nu; });
    double weight = 0.0;
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        const Branch& b = branches_[i];
        if (i > 0 && branches_[i - 1].nu == b.nu) throw std::invalid_argument("duplicate environment configuration");
        if ((b.nu >> num_sites) != 0) throw std::invalid_argument("environment configuration out of range");
        if (std::abs(std::norm(b.c1) + std::norm(b.c2) - 1.0) > kUnitTol)
            throw std::invalid_argument("branch system amplitudes are not normalized");
        weight += std::norm(b.alpha0);
    }
    if (std::abs(weight - 1.0) > kUnitTol) throw std::invalid_argument("branch weights are not normalized");
}

std::optional<std::size_t> BranchEnsemble::find(EnvConfig nu) const {
    const auto it = std::lower_bound(branches_.begin(), branches_.end(), nu,
                                     [](const Branch& b, EnvConfig key) { return b.nu < key; });
    if (it == branches_.end() || it->nu != nu) return std::nullopt;
    return static_cast<std::size_t>(it - branches_.begin());
}

BranchEnsemble make_ensemble(int num_sites, const EnsembleSpec& spec, const Rng& rng) {
    if (num_sites < 1 || num_sites > 63) throw std::invalid_argument("ensemble needs 1 <= M <= 63");
    const bool full_allowed = num_sites <= kMaxFullEnsembleSites;
    const std::uint64_t full = std::uint64_t{1} << num_sites;

    std::vector<EnvConfig> configs;
    bool sampled = false;
    if (!spec.sample_size && full_allowed) {
        configs.resize(full);
        for (std::uint64_t nu = 0; nu < full; ++nu) configs[nu] = nu;
    } else {
        std::size_t k = spec.sample_size.value_or(kDefaultSampleSize);
        if (k == 0) throw std::invalid_argument("sample size must be positive");
        if (num_sites < 63 && k >= full) {
            k = full;
            configs.resize(full);
            for (std::uint64_t nu = 0; nu < full; ++nu) configs[nu] = nu;
        } else {
            sampled = true;
            Rng pick = rng.split("configs");
            std::unordered_set<EnvConfig> seen;
            const std::uint64_t mask = full - 1;
            while (configs.size() < k) {
                const EnvConfig nu = pick.next_u64() & mask;
                if (seen.insert(nu).second) configs.push_back(nu);
            }
            std::sort(configs.begin(), configs.end());
        }
    }

    Rng amps = rng.split("system");
    std::pair<cplx, cplx> shared{1.0, 0.0};
    if (spec.mode == EnsembleMode::Product) shared = spec.product_amps.value_or(amps.bloch_state());

    const cplx weight(1.0 / std::sqrt(static_cast<double>(configs.size())), 0.0);
    std::vector<Branch> branches;
    branches.reserve(configs.size());
    for (EnvConfig nu : configs) {
        Branch b;
        b.nu = nu;
        b.alpha0 = weight;
        // Per-nu stream keeps c_nu independent of which other nu are sampled.
        Rng local = amps.split(nu);
        switch (spec.mode) {
            case EnsembleMode::BlochRandom: std::tie(b.c1, b.c2) = local.bloch_state(); break;
            case EnsembleMode::Product: std::tie(b.c1, b.c2) = shared; break;
            case EnsembleMode::Polarized:
                if (local.coin()) {
                    b.c1 = 1.0;
                    b.c2 = 0.0;
                } else {
                    b.c1 = 0.0;
                    b.c2 = 1.0;
                }
                break;
        }
        branches.push_back(b);
    }
    return BranchEnsemble(num_sites, std::move(branches), sampled);
}

std::pair<cplx, cplx> system_amps(double t, double tunneling, cplx c1, cplx c2) {
    const double c = std::cos(tunneling * t);
    const cplx mis(0.0, -std::sin(tunneling * t));
    return {c1 * c + c2 * mis, c2 * c + c1 * mis};
}

double lambda_nu(const ModelParams& params, const Branch& branch, double t) {
    const auto [a1, a2] = system_amps(t, params.tunneling(), branch.c1, branch.c2);
    return detail::interaction_energy(
        params, [&](int l) { return site_bit(branch.nu, l) != 0; }, std::norm(a1), std::norm(a2), t);
}

std::vector<cplx> offdiag_elements(const ModelParams& params, const Branch& branch, double t) {
    const auto [a1, a2] = system_amps(t, params.tunneling(), branch.c1, branch.c2);
    const auto is_down = [&](int l) { return site_bit(branch.nu, l) != 0; };
    std::vector<cplx> out(params.num_sites());
    for (int l = 0; l < params.num_sites(); ++l)
        out[l] = cplx(0.0, detail::flip_element(params, is_down, std::norm(a1), std::norm(a2), t, l));
    return out;
}

PhaseRecordSet::PhaseRecordSet(TimeGrid grid, std::size_t num_branches)
    : grid_(grid),
      num_branches_(num_branches),
      lambda_(num_branches * grid.size()),
      big_lambda_(num_branches * grid.size()),
      alpha_(num_branches * grid.size()) {}

PhaseRecordSet evolve_diagonal(const ModelParams& params, const BranchEnsemble& ensemble, const TimeGrid& grid) {
    if (ensemble.num_sites() != params.num_sites()) throw DimensionError("ensemble and model disagree on M");
    PhaseRecordSet rec(grid, ensemble.size());
    const auto nb = static_cast<std::ptrdiff_t>(ensemble.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nb; ++b) {
        const Branch& br = ensemble[b];
        double f_prev = lambda_nu(params, br, grid.time(0));
        double acc = 0.0;
        rec.lambda(b, 0) = f_prev;
        rec.Lambda(b, 0) = 0.0;
        rec.alpha(b, 0) = br.alpha0;
        for (std::size_t k = 1; k < grid.size(); ++k) {
            const double ta = grid.time(k - 1);
            const double tb = grid.time(k);
            const double f_mid = lambda_nu(params, br, 0.5 * (ta + tb));
            const double f_next = lambda_nu(params, br, tb);
            acc += (tb - ta) / 6.0 * (f_prev + 4.0 * f_mid + f_next);
            rec.lambda(b, k) = f_next;
            rec.Lambda(b, k) = acc;
            rec.alpha(b, k) = br.alpha0 * std::polar(1.0, -acc);
            f_prev = f_next;
        }
    }
    return rec;
}

StateVector branch_superposition(const ModelParams& params, const BranchEnsemble& ensemble, double t,
                                 std::span<const cplx> weights) {
    if (ensemble.num_sites() != params.num_sites()) throw DimensionError("ensemble and model disagree on M");
    if (weights.size() != ensemble.size()) throw DimensionError("one weight per branch required");
    StateVector psi(params.num_sites());
    for (std::size_t b = 0; b < ensemble.size(); ++b) {
        const Branch& br = ensemble[b];
        const auto [a1, a2] = system_amps(t, params.tunneling(), br.c1, br.c2);
        psi.at(Pointer::First, br.nu) = weights[b] * a1;
        psi.at(Pointer::Second, br.nu) = weights[b] * a2;
    }
    std::vector<double> angles(params.num_sites());
    for (int l = 0; l < params.num_sites(); ++l) angles[l] = params.omega(l) * t;
    kernels::parallel::rotate_sites(params.num_sites(), angles, psi.amps());
    return psi;
}

StateVector assemble_state(const ModelParams& params, const BranchEnsemble& ensemble, const PhaseRecordSet& phases,
                           double t) {
    const auto k = phases.grid().index_of(t);
    if (!k) throw std::invalid_argument("assemble_state: t is not a grid point");
    if (phases.num_branches() != ensemble.size()) throw DimensionError("phase record does not match the ensemble");
    std::vector<cplx> weights(ensemble.size());
    for (std::size_t b = 0; b < ensemble.size(); ++b) weights[b] = phases.alpha(b, *k);
    return branch_superposition(params, ensemble, phases.grid().time(*k), weights);
}

void write_phases_csv(std::ostream& os, const BranchEnsemble& ensemble, const PhaseRecordSet& phases) {
    csv::write_header(os, {"nu", "t", "lambda", "Lambda", "re_alpha", "im_alpha"});
    for (std::size_t b = 0; b < ensemble.size(); ++b) {
        const auto nu = std::to_string(ensemble[b].nu);
        for (std::size_t k = 0; k < phases.grid().size(); ++k) {
            const cplx a = phases.alpha(b, k);
            csv::write_row(os, {nu, csv::format(phases.grid().time(k)), csv::format(phases.lambda(b, k)),
                                csv::format(phases.Lambda(b, k)), csv::format(a.real()), csv::format(a.imag())});
        }
    }
}

}  // namespace decohere
