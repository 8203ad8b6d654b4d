#include "decohere/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "decohere/csv.hpp"
#include "decohere/errors.hpp"

namespace decohere {

// --- Landscape ------------------------------------------------------------

Landscape::Landscape(int num_sites, double t, std::vector<LandscapeEntry> entries)
    : num_sites_(num_sites), t_(t), entries_(std::move(entries)) {
    if (num_sites < 1 || num_sites > 63) throw std::invalid_argument("landscape needs 1 <= M <= 63");
    std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.nu < b.nu; });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (i > 0 && entries_[i - 1].nu == entries_[i].nu) throw std::invalid_argument("duplicate nu in landscape");
        if ((entries_[i].nu >> num_sites) != 0) throw std::invalid_argument("nu out of range in landscape");
        if (!std::isfinite(entries_[i].Lambda)) throw std::invalid_argument("non-finite Lambda in landscape");
    }
}

std::optional<std::size_t> Landscape::find(EnvConfig nu) const {
    const auto it = std::lower_bound(entries_.begin(), entries_.end(), nu,
                                     [](const LandscapeEntry& e, EnvConfig key) { return e.nu < key; });
    if (it == entries_.end() || it->nu != nu) return std::nullopt;
    return static_cast<std::size_t>(it - entries_.begin());
}

std::vector<std::size_t> Landscape::neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (int l = 0; l < num_sites_; ++l)
        if (auto j = find(entries_[i].nu ^ (EnvConfig{1} << l))) out.push_back(*j);
    return out;
}

std::vector<std::size_t> Landscape::ball(std::size_t i, int radius) const {
    if (radius < 1) return {};
    if (radius == 1) return neighbors(i);
    std::vector<std::size_t> out;
    const int r = std::min(radius, num_sites_);
    // Enumerate flip masks of popcount 1..r in increasing-bit order.
    std::vector<int> pick;
    auto recurse = [&](auto&& self, int start, EnvConfig mask) -> void {
        if (!pick.empty()) {
            if (auto j = find(entries_[i].nu ^ mask)) out.push_back(*j);
        }
        if (static_cast<int>(pick.size()) == r) return;
        for (int l = start; l < num_sites_; ++l) {
            pick.push_back(l);
            self(self, l + 1, mask | (EnvConfig{1} << l));
            pick.pop_back();
        }
    };
    recurse(recurse, 0, 0);
    std::sort(out.begin(), out.end());
    return out;
}

Landscape build_landscape(const BranchEnsemble& ensemble, const PhaseRecordSet& phases, std::size_t k) {
    if (phases.num_branches() != ensemble.size()) throw DimensionError("phase record does not match the ensemble");
    if (k >= phases.grid().size()) throw std::out_of_range("grid index out of range");
    std::vector<LandscapeEntry> entries(ensemble.size());
    for (std::size_t b = 0; b < ensemble.size(); ++b) {
        entries[b] = {ensemble[b].nu, phases.Lambda(b, k), phases.alpha(b, k), ensemble[b].c1, ensemble[b].c2};
    }
    return Landscape(ensemble.num_sites(), phases.grid().time(k), std::move(entries));
}

// --- Selection --------------------------------------------------------------

double default_selection_tol(const Landscape& landscape) {
    double m = 0.0;
    for (const auto& e : landscape.entries()) m = std::max(m, std::abs(e.Lambda));
    return 1e-12 * m;
}

namespace {

struct DisjointSets {
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t root(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void join(std::size_t a, std::size_t b) {
        a = root(a);
        b = root(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<std::size_t> parent;
};

}  // namespace

SelectionResult select_extremal(const Landscape& landscape, std::optional<double> tol_opt) {
    if (landscape.empty()) throw std::invalid_argument("cannot select extrema of an empty landscape");
    const double tol = tol_opt.value_or(default_selection_tol(landscape));
    SelectionResult out;
    DisjointSets ties(landscape.size());
    for (std::size_t i = 0; i < landscape.size(); ++i) {
        const auto nbrs = landscape.neighbors(i);
        if (nbrs.empty()) continue;
        const double x = landscape[i].Lambda;
        bool is_min = true;
        bool is_max = true;
        for (std::size_t j : nbrs) {
            const double y = landscape[j].Lambda;
            if (!(x < y - tol)) is_min = false;
            if (!(x > y + tol)) is_max = false;
            if (std::abs(x - y) <= tol) ties.join(i, j);
        }
        if (is_min) out.minima.push_back(landscape[i].nu);
        if (is_max) out.maxima.push_back(landscape[i].nu);
    }

    std::vector<std::vector<EnvConfig>> groups(landscape.size());
    for (std::size_t i = 0; i < landscape.size(); ++i) groups[ties.root(i)].push_back(landscape[i].nu);
    for (auto& g : groups)
        if (g.size() >= 2) out.plateaus.push_back(std::move(g));

    out.participation_ratio = participation_ratio(survival_weights(landscape));
    return out;
}

std::vector<EnvConfig> selected_configs(const SelectionResult& selection) {
    std::vector<EnvConfig> out = selection.minima;
    out.insert(out.end(), selection.maxima.begin(), selection.maxima.end());
    if (out.empty())
        for (const auto& p : selection.plateaus) out.insert(out.end(), p.begin(), p.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<double> survival_weights(const Landscape& landscape, int radius) {
    std::vector<double> w(landscape.size());
    for (std::size_t i = 0; i < landscape.size(); ++i) {
        cplx coherent = landscape[i].alpha;
        double total = std::abs(landscape[i].alpha);
        for (std::size_t j : landscape.ball(i, radius)) {
            coherent += landscape[j].alpha;
            total += std::abs(landscape[j].alpha);
        }
        w[i] = total > 0.0 ? std::abs(coherent) / total : 0.0;
    }
    return w;
}

double participation_ratio(std::span<const double> weights) {
    double s = 0.0, s2 = 0.0;
    for (double x : weights) {
        s += x;
        s2 += x * x;
    }
    return s2 > 0.0 ? s * s / s2 : std::numeric_limits<double>::quiet_NaN();
}

void write_landscape_csv(std::ostream& os, const Landscape& landscape, const SelectionResult& selection,
                         std::span<const double> weights) {
    csv::write_header(os, {"nu", "Lambda", "weight", "is_min", "is_max", "plateau_id"});
    auto contains = [](const std::vector<EnvConfig>& v, EnvConfig nu) { return std::binary_search(v.begin(), v.end(), nu); };
    for (std::size_t i = 0; i < landscape.size(); ++i) {
        const EnvConfig nu = landscape[i].nu;
        long long plateau = -1;
        for (std::size_t p = 0; p < selection.plateaus.size(); ++p)
            if (contains(selection.plateaus[p], nu)) plateau = static_cast<long long>(p);
        csv::write_row(os, {std::to_string(nu), csv::format(landscape[i].Lambda), csv::format(weights[i]),
                            contains(selection.minima, nu) ? "1" : "0", contains(selection.maxima, nu) ? "1" : "0",
                            csv::format(plateau)});
    }
}

nlohmann::json selection_json(const SelectionResult& selection) {
    nlohmann::json j{{"minima", selection.minima}, {"maxima", selection.maxima}, {"plateaus", selection.plateaus}};
    if (std::isfinite(selection.participation_ratio))
        j["participation_ratio"] = selection.participation_ratio;
    else
        j["participation_ratio"] = nullptr;
    return j;
}

// --- Two-branch reconstruction ------------------------------------------------

TwoBranchResult reconstruct_two_branch(const ModelParams& params, const BranchEnsemble& ensemble,
                                       const PhaseRecordSet& phases, double t,
                                       std::optional<std::span<const EnvConfig>> surviving, double polarization_tol) {
    if (ensemble.num_sites() != params.num_sites()) throw DimensionError("ensemble and model disagree on M");
    const auto k = phases.grid().index_of(t);
    if (!k) throw std::invalid_argument("reconstruct_two_branch: t is not a grid point");

    TwoBranchResult out;
    std::vector<std::size_t> members;
    if (surviving) {
        for (EnvConfig nu : *surviving)
            if (auto b = ensemble.find(nu)) members.push_back(*b);
    } else {
        members.resize(ensemble.size());
        std::iota(members.begin(), members.end(), std::size_t{0});
    }

    for (std::size_t b : members) {
        const double p = std::norm(ensemble[b].c1);
        if (std::min(p, 1.0 - p) > polarization_tol) {
            out.diagnostic = "ensemble does not polarize: branch nu=" + std::to_string(ensemble[b].nu) +
                             " has |c1|^2 = " + std::to_string(p);
            return out;
        }
    }

    // Group environment vectors in the interaction-picture basis: f_g[nu] = alpha_nu(t) c_{g,nu}.
    // Both groups share the same self-evolution unitary, so overlaps can be taken on the coefficients.
    std::vector<std::pair<EnvConfig, cplx>> f1, f2;
    double w1 = 0.0, w2 = 0.0, l1 = 0.0, l2 = 0.0;
    for (std::size_t b : members) {
        const Branch& br = ensemble[b];
        const double p = std::norm(br.c1);
        if (std::abs(p - 0.5) <= 1e-9) {
            ++out.excluded;
            continue;
        }
        const cplx a = phases.alpha(b, *k);
        if (p > 0.5) {
            const cplx f = a * br.c1;
            f1.emplace_back(br.nu, f);
            w1 += std::norm(f);
            l1 += std::norm(f) * phases.Lambda(b, *k);
        } else {
            const cplx f = a * br.c2;
            f2.emplace_back(br.nu, f);
            w2 += std::norm(f);
            l2 += std::norm(f) * phases.Lambda(b, *k);
        }
    }
    if (f1.empty() || f2.empty() || w1 == 0.0 || w2 == 0.0) {
        out.diagnostic = "no two-branch structure: a pointer group is empty";
        return out;
    }

    cplx overlap{};
    std::size_t j = 0;
    for (const auto& [nu, f] : f1) {  // both lists are sorted by nu
        while (j < f2.size() && f2[j].first < nu) ++j;
        if (j < f2.size() && f2[j].first == nu) overlap += f * std::conj(f2[j].second);
    }
    out.has_structure = true;
    out.alpha1 = std::sqrt(w1);
    out.alpha2 = std::sqrt(w2);
    out.Lambda1 = l1 / w1;
    out.Lambda2 = l2 / w2;
    out.r_pred = overlap / (out.alpha1 * out.alpha2);
    out.diagnostic = "two-branch structure";
    return out;
}

// --- Product-state check ------------------------------------------------------------

NoticeReport notice_check(const BranchEnsemble& ensemble, const PhaseRecordSet& phases, double t, double tol) {
    const auto k = phases.grid().index_of(t);
    if (!k) throw std::invalid_argument("notice_check: t is not a grid point");

    auto deviation = [](const Branch& a, const Branch& b) {
        const cplx ov = std::conj(a.c1) * b.c1 + std::conj(a.c2) * b.c2;
        return 1.0 - std::norm(ov);
    };

    NoticeReport rep;
    const Branch& ref = ensemble[0];
    rep.degenerate = true;
    for (const Branch& b : ensemble.branches())
        if (deviation(ref, b) > tol) {
            rep.degenerate = false;
            break;
        }

    const Landscape landscape = build_landscape(ensemble, phases, *k);
    const auto selected = selected_configs(select_extremal(landscape));
    rep.num_selected = selected.size();

    double mean = 0.0;
    std::vector<double> pops;
    for (EnvConfig nu : selected) {
        const Branch& b = ensemble[*ensemble.find(nu)];
        const Branch& first = ensemble[*ensemble.find(selected.front())];
        rep.selected_state_deviation = std::max(rep.selected_state_deviation, deviation(first, b));
        pops.push_back(std::norm(b.c1));
        mean += pops.back();
    }
    if (!pops.empty()) {
        mean /= static_cast<double>(pops.size());
        for (double p : pops) rep.c1_dispersion += (p - mean) * (p - mean);
        rep.c1_dispersion /= static_cast<double>(pops.size());
    }
    rep.selected_states_identical = rep.selected_state_deviation <= tol;
    rep.message = rep.degenerate ? "degenerate: all branch system states identical"
                                 : "non-degenerate: branch system states differ";
    return rep;
}

nlohmann::json notice_json(const NoticeReport& r) {
    return nlohmann::json{{"degenerate", r.degenerate},
                          {"num_selected", r.num_selected},
                          {"selected_state_deviation", r.selected_state_deviation},
                          {"selected_states_identical", r.selected_states_identical},
                          {"c1_dispersion", r.c1_dispersion},
                          {"message", r.message}};
}

// --- Pure dephasing ------------------------------------------------------------------

std::vector<std::optional<cplx>> dephasing_closed_form(const ModelParams& params, cplx c1, cplx c2,
                                                       std::span<const std::pair<cplx, cplx>> site_amps,
                                                       const TimeGrid& grid) {
    if (!params.is_pure_dephasing())
        throw std::invalid_argument("dephasing closed form requires E = 0 and omega = 0");
    if (static_cast<int>(site_amps.size()) != params.num_sites()) throw DimensionError("one site state per site required");
    for (const auto& [a, b] : site_amps)
        if (std::abs(std::norm(a) + std::norm(b) - 1.0) > 1e-12) throw std::invalid_argument("site state not normalized");

    std::vector<std::optional<cplx>> out(grid.size());
    if (std::abs(c1) < 1e-12 || std::abs(c2) < 1e-12) return out;
    const cplx phase = std::polar(1.0, std::arg(c1 * std::conj(c2)));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        cplx r = phase;
        for (int l = 0; l < params.num_sites(); ++l) {
            const double d_up = params.coupling(l, Pointer::First, 0) - params.coupling(l, Pointer::Second, 0);
            const double d_down = params.coupling(l, Pointer::First, 1) - params.coupling(l, Pointer::Second, 1);
            r *= std::norm(site_amps[l].first) * std::polar(1.0, -d_up * t) +
                 std::norm(site_amps[l].second) * std::polar(1.0, -d_down * t);
        }
        out[k] = r;
    }
    return out;
}

}  // namespace decohere
