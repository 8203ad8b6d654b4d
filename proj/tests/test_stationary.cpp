#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "decohere/stationary.hpp"
#include "support.hpp"

using namespace decohere;

namespace {

Landscape make_landscape(int m, const std::vector<std::pair<EnvConfig, double>>& values) {
    std::vector<LandscapeEntry> e;
    for (auto [nu, lam] : values) e.push_back({nu, lam, std::exp(-oracle::I * lam), 1.0, 0.0});
    return Landscape(m, 0.0, e);
}

Landscape random_full_landscape(int m, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::pair<EnvConfig, double>> v;
    for (EnvConfig nu = 0; nu < (EnvConfig{1} << m); ++nu) v.emplace_back(nu, rng.uniform(-5.0, 5.0));
    return make_landscape(m, v);
}

std::set<EnvConfig> as_set(const std::vector<EnvConfig>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("selection on a two-site landscape") {
    const auto land = make_landscape(2, {{0b00, 0.1}, {0b01, 0.5}, {0b10, 0.4}, {0b11, 0.9}});
    const auto sel = select_extremal(land);
    CHECK(sel.minima == std::vector<EnvConfig>{0b00});
    CHECK(sel.maxima == std::vector<EnvConfig>{0b11});
    CHECK(sel.plateaus.empty());
    CHECK(selected_configs(sel) == std::vector<EnvConfig>{0b00, 0b11});
}

TEST_CASE("constant landscape is one plateau") {
    std::vector<std::pair<EnvConfig, double>> v;
    for (EnvConfig nu = 0; nu < 16; ++nu) v.emplace_back(nu, 3.0);
    const auto land = make_landscape(4, v);
    const auto sel = select_extremal(land);
    CHECK(sel.minima.empty());
    CHECK(sel.maxima.empty());
    REQUIRE(sel.plateaus.size() == 1);
    CHECK(sel.plateaus[0].size() == 16);
    CHECK(selected_configs(sel).size() == 16);
    for (double w : survival_weights(land)) CHECK(w == doctest::Approx(1.0));
}

TEST_CASE("isolated entries are neither minima nor maxima") {
    const auto land = make_landscape(4, {{0b0000, 1.0}, {0b0011, 2.0}});
    const auto sel = select_extremal(land);
    CHECK(sel.minima.empty());
    CHECK(sel.maxima.empty());
    CHECK_THROWS_AS(select_extremal(Landscape(3, 0.0, {})), std::invalid_argument);
}

TEST_CASE("landscape validation and neighborhoods") {
    CHECK_THROWS_AS(make_landscape(2, {{1, 0.0}, {1, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_landscape(2, {{4, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_landscape(2, {{0, NAN}}), std::invalid_argument);
    const auto land = random_full_landscape(5, 1);
    CHECK(land.neighbors(0).size() == 5);
    CHECK(land.ball(0, 2).size() == 5 + 10);
}

TEST_CASE("selection matches a brute-force neighbor scan") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const int m = 8;
        const auto land = random_full_landscape(m, 100 + s);
        std::set<EnvConfig> mins, maxs;
        for (EnvConfig nu = 0; nu < 256; ++nu) {
            bool lo = true, hi = true;
            for (int l = 0; l < m; ++l) {
                const double y = land[nu ^ (EnvConfig{1} << l)].Lambda;
                lo = lo && land[nu].Lambda < y;
                hi = hi && land[nu].Lambda > y;
            }
            if (lo) mins.insert(nu);
            if (hi) maxs.insert(nu);
        }
        const auto sel = select_extremal(land);
        CHECK(as_set(sel.minima) == mins);
        CHECK(as_set(sel.maxima) == maxs);
    }
}

TEST_CASE("selection is invariant under affine maps") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto land = random_full_landscape(6, 200 + s);
        const auto base = select_extremal(land);
        for (auto [a, b] : {std::pair{2.5, -1.0}, std::pair{-0.5, 3.0}}) {
            std::vector<std::pair<EnvConfig, double>> v;
            for (const auto& e : land.entries()) v.emplace_back(e.nu, a * e.Lambda + b);
            const auto sel = select_extremal(make_landscape(6, v));
            CHECK(as_set(a > 0 ? sel.minima : sel.maxima) == as_set(base.minima));
            CHECK(as_set(a > 0 ? sel.maxima : sel.minima) == as_set(base.maxima));
        }
    }
}

TEST_CASE("selection is covariant under site permutations") {
    const int m = 6;
    const std::vector<int> perm = {2, 5, 0, 1, 4, 3};
    auto permute = [&](EnvConfig nu) {
        EnvConfig mu = 0;
        for (int l = 0; l < m; ++l) mu |= static_cast<EnvConfig>(site_bit(nu, l)) << perm[l];
        return mu;
    };
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto land = random_full_landscape(m, 300 + s);
        std::vector<std::pair<EnvConfig, double>> v;
        for (const auto& e : land.entries()) v.emplace_back(permute(e.nu), e.Lambda);
        const auto base = select_extremal(land);
        const auto sel = select_extremal(make_landscape(m, v));
        std::set<EnvConfig> mapped_min, mapped_max;
        for (auto nu : base.minima) mapped_min.insert(permute(nu));
        for (auto nu : base.maxima) mapped_max.insert(permute(nu));
        CHECK(as_set(sel.minima) == mapped_min);
        CHECK(as_set(sel.maxima) == mapped_max);
    }
}

TEST_CASE("survival weight arithmetic") {
    // Both neighbors exactly pi out of phase: |1 - 2| / 3.
    const auto land = make_landscape(2, {{0b00, 0.0}, {0b01, M_PI}, {0b10, M_PI}});
    CHECK(survival_weights(land)[0] == doctest::Approx(1.0 / 3.0));
    for (double w : survival_weights(random_full_landscape(6, 4))) {
        CHECK(w >= 0.0);
        CHECK(w <= 1.0 + 1e-15);
    }
}

TEST_CASE("random-phase neighborhoods give weight about 1/sqrt(ball size)") {
    // E|sum of n unit phasors|^2 = n, so the mean squared weight is 1/n.
    const int m = 60;
    Rng rng(5);
    double sum2 = 0.0;
    const int samples = 400;
    for (int s = 0; s < samples; ++s) {
        std::vector<std::pair<EnvConfig, double>> v;
        v.emplace_back(0, rng.uniform(0.0, 2.0 * M_PI));
        for (int l = 0; l < m; ++l) v.emplace_back(EnvConfig{1} << l, rng.uniform(0.0, 2.0 * M_PI));
        const auto w = survival_weights(make_landscape(m, v))[0];
        sum2 += w * w;
    }
    CHECK(std::sqrt(sum2 / samples) == doctest::Approx(1.0 / std::sqrt(m + 1.0)).epsilon(0.1));
}

TEST_CASE("participation ratio") {
    const std::vector<double> flat(10, 0.3);
    CHECK(participation_ratio(flat) == doctest::Approx(10.0));
    const std::vector<double> spike = {0.0, 1.0, 0.0};
    CHECK(participation_ratio(spike) == doctest::Approx(1.0));
    CHECK(std::isnan(participation_ratio(std::vector<double>(3, 0.0))));
}

TEST_CASE("two-branch reconstruction") {
    const int m = 6;
    const auto p = oracle::random_params(7, m);
    const TimeGrid grid(0.0, 2.0, 4);
    SUBCASE("single pointer group") {
        EnsembleSpec spec;
        spec.mode = EnsembleMode::Product;
        spec.product_amps = {1.0, 0.0};
        const auto ens = make_ensemble(m, spec, Rng(1));
        const auto r = reconstruct_two_branch(p, ens, evolve_diagonal(p, ens, grid), 2.0);
        CHECK_FALSE(r.has_structure);
        CHECK(r.diagnostic.find("no two-branch structure") != std::string::npos);
    }
    SUBCASE("unpolarized ensemble") {
        EnsembleSpec spec;
        const auto ens = make_ensemble(m, spec, Rng(2));
        const auto r = reconstruct_two_branch(p, ens, evolve_diagonal(p, ens, grid), 2.0);
        CHECK_FALSE(r.has_structure);
        CHECK(r.diagnostic.find("polarize") != std::string::npos);
    }
    SUBCASE("disjoint groups are orthogonal") {
        EnsembleSpec spec;
        spec.mode = EnsembleMode::Polarized;
        const auto ens = make_ensemble(m, spec, Rng(3));
        const auto r = reconstruct_two_branch(p, ens, evolve_diagonal(p, ens, grid), 2.0);
        REQUIRE(r.has_structure);
        CHECK(std::abs(*r.r_pred) == 0.0);
        CHECK(r.alpha1 * r.alpha1 + r.alpha2 * r.alpha2 == doctest::Approx(1.0));
    }
    SUBCASE("superposed branches are excluded from both groups") {
        // nu = 0 carries phi_1, nu = 1 carries phi_2, plus a superposed branch left out of both groups.
        const cplx h = 1.0 / std::sqrt(3.0);
        const BranchEnsemble ens(m, {Branch{0, 1.0, 0.0, h}, Branch{1, 0.0, 1.0, h},
                                     Branch{2, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), h}},
                                 false);
        const auto ph = evolve_diagonal(p, ens, grid);
        const auto r = reconstruct_two_branch(p, ens, ph, 2.0, std::nullopt, 0.6);
        REQUIRE(r.has_structure);
        CHECK(r.excluded == 1);
        CHECK(r.Lambda1 == doctest::Approx(ph.Lambda(0, 4)));
        CHECK(r.Lambda2 == doctest::Approx(ph.Lambda(1, 4)));
    }
}

TEST_CASE("product-state check") {
    const int m = 8;
    const auto p = oracle::random_params(9, m);
    const TimeGrid grid(0.0, 1.0, 4);
    SUBCASE("product mode is degenerate") {
        EnsembleSpec spec;
        spec.mode = EnsembleMode::Product;
        const auto ens = make_ensemble(m, spec, Rng(10));
        const auto rep = notice_check(ens, evolve_diagonal(p, ens, grid), 1.0);
        CHECK(rep.degenerate);
        CHECK(rep.selected_states_identical);
        CHECK(rep.selected_state_deviation <= 1e-10);
        CHECK(rep.message == "degenerate: all branch system states identical");
    }
    SUBCASE("bloch-random mode is not") {
        const auto ens = make_ensemble(m, EnsembleSpec{}, Rng(11));
        const auto rep = notice_check(ens, evolve_diagonal(p, ens, grid), 1.0);
        CHECK_FALSE(rep.degenerate);
        CHECK(rep.num_selected > 0);
        CHECK(rep.c1_dispersion > 0.0);
        CHECK(notice_json(rep)["degenerate"] == false);
    }
    SUBCASE("two polarized branches") {
        const auto q = oracle::random_params(12, 1);
        const cplx h = 1.0 / std::sqrt(2.0);
        const BranchEnsemble ens(1, {Branch{0, 1.0, 0.0, h}, Branch{1, 0.0, 1.0, h}}, false);
        const auto rep = notice_check(ens, evolve_diagonal(q, ens, grid), 1.0);
        CHECK_FALSE(rep.degenerate);
        CHECK(rep.num_selected == 2);
        CHECK(rep.c1_dispersion == doctest::Approx(0.25));
    }
}

TEST_CASE("pure-dephasing closed form") {
    const TimeGrid grid(0.0, 6.0, 24);
    SUBCASE("one site gives cos t") {
        SiteCoupling v{};
        v[0] = {1.0, -1.0};
        const auto p = oracle::make_params(1, 0.0, {0.0}, {v});
        const double h = 1.0 / std::sqrt(2.0);
        const std::vector<std::pair<cplx, cplx>> site = {{h, h}};
        const auto r = dephasing_closed_form(p, h, h, site, grid);
        for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(*r[k] - std::cos(grid.time(k))) < 1e-15);
    }
    SUBCASE("pointer-blind coupling leaves r at 1") {
        SiteCoupling v{};
        v[0] = {0.3, -0.4};
        v[1] = {0.3, -0.4};
        const auto p = oracle::make_params(2, 0.0, {0.0, 0.0}, {v, v});
        const std::vector<std::pair<cplx, cplx>> sites = {{0.6, 0.8}, {0.8, cplx(0, 0.6)}};
        for (const auto& r : dephasing_closed_form(p, 0.6, 0.8, sites, grid)) CHECK(std::abs(*r - 1.0) < 1e-15);
    }
    SUBCASE("undefined when a pointer amplitude vanishes") {
        const auto p = oracle::make_params(1, 0.0, {0.0}, {SiteCoupling{}});
        const std::vector<std::pair<cplx, cplx>> site = {{1.0, 0.0}};
        CHECK_FALSE(dephasing_closed_form(p, 1.0, 0.0, site, grid)[3].has_value());
    }
    SUBCASE("requires the pure dephasing limit") {
        const auto p = oracle::random_params(13, 1);
        const std::vector<std::pair<cplx, cplx>> site = {{1.0, 0.0}};
        CHECK_THROWS_AS(dephasing_closed_form(p, 0.6, 0.8, site, grid), std::invalid_argument);
    }
    SUBCASE("matches exact propagation") {
        const int m = 7;
        auto d = oracle::random_params(14, m, 0.5).describe();
        d.tunneling = 0.0;
        std::fill(d.omega.begin(), d.omega.end(), 0.0);
        const auto p = build_params(d);
        Rng rng(15);
        std::vector<std::pair<cplx, cplx>> sites;
        for (int l = 0; l < m; ++l) sites.push_back(rng.bloch_state());
        const auto [c1, c2] = rng.bloch_state();
        const auto closed = dephasing_closed_form(p, c1, c2, sites, grid);
        const auto traj = propagate(product_state(c1, c2, sites), p, grid);
        for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(*closed[k] - *traj.points[k].r) < 1e-8);
    }
}

TEST_CASE("landscape CSV and selection JSON") {
    const auto land = make_landscape(2, {{0b00, 0.1}, {0b01, 0.5}, {0b10, 0.4}, {0b11, 0.9}});
    const auto sel = select_extremal(land);
    std::ostringstream os;
    write_landscape_csv(os, land, sel, survival_weights(land));
    const std::string s = os.str();
    CHECK(s.rfind("nu,Lambda,weight,is_min,is_max,plateau_id\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 5);
    const auto j = selection_json(sel);
    CHECK(j["minima"] == nlohmann::json::array({0}));
    CHECK(j["maxima"] == nlohmann::json::array({3}));
}
