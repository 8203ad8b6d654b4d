#include "decohere/scaling.hpp"

#include <cmath>
#include <stdexcept>

#include "closed_form.hpp"
#include "decohere/branch.hpp"
#include "decohere/csv.hpp"
#include "decohere/rng.hpp"

namespace decohere {

SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    SlopeFit fit;
    const std::size_t n = x.size();
    if (n != y.size() || n < 3) return fit;
    for (std::size_t i = 0; i < n; ++i)
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) return fit;

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y[i]) - my);
    }
    if (sxx == 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::log(y[i]) - (fit.intercept + fit.slope * std::log(x[i]));
        sse += r * r;
    }
    fit.ci95 = 1.96 * std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    fit.valid = true;
    return fit;
}

ScalingSummary scaling_stats(const ScalingRequest& req) {
    if (req.sizes.size() < 3) throw std::invalid_argument("scaling study needs at least 3 sizes to fit a slope");
    for (int m : req.sizes)
        if (m < 8) throw std::invalid_argument("scaling study sizes must be >= 8");
    if (req.samples < 2) throw std::invalid_argument("scaling study needs at least 2 samples per size");

    SamplingSpec shifted = req.dist;
    if (shifted.v_shift == 0.0) shifted.v_shift = req.mean_shift_fraction * req.dist.coupling;

    ScalingSummary out;
    out.shifted_v_mean = shifted.v_shift;
    const Rng root(req.seed);
    for (int m : req.sizes) {
        const Rng per_size = root.split(static_cast<std::uint64_t>(m));
        // Welford updates: the diagonal mean is O(M) and would swamp a one-pass variance.
        double mean_d = 0.0, m2_d = 0.0, sum_shift = 0.0;
        cplx mean_o{};
        double m2_o = 0.0;
        std::vector<char> down(m);
        for (int k = 0; k < req.samples; ++k) {
            const Rng draw = per_size.split(static_cast<std::uint64_t>(k));
            const std::uint64_t model_seed = draw.split("model").seed();
            // Same seed, so both models share their uniform draws and differ only by the shift.
            const ModelParams p = sample_params(model_seed, m, req.dist);
            const ModelParams ps = sample_params(model_seed, m, shifted);
            Rng spins = draw.split("nu");
            for (int l = 0; l < m; ++l) down[l] = spins.coin();
            Rng sys = draw.split("system");
            const auto [c1, c2] = sys.bloch_state();
            const auto [a1, a2] = system_amps(req.t, p.tunneling(), c1, c2);
            const double w1 = std::norm(a1), w2 = std::norm(a2);
            const auto is_down = [&](int l) { return down[l] != 0; };

            const double lam = detail::interaction_energy(p, is_down, w1, w2, req.t);
            const double lam_shift = detail::interaction_energy(ps, is_down, w1, w2, req.t);
            double off = 0.0;
            for (int l = 0; l < m; ++l) off += detail::flip_element(p, is_down, w1, w2, req.t, l);
            const cplx off_sum(0.0, off);

            const double n_k = k + 1;
            const double dd = lam - mean_d;
            mean_d += dd / n_k;
            m2_d += dd * (lam - mean_d);
            const cplx dof = off_sum - mean_o;
            mean_o += dof / n_k;
            m2_o += std::real(std::conj(dof) * (off_sum - mean_o));
            sum_shift += lam_shift;
        }
        const double n = req.samples;
        ScalingRow row;
        row.num_sites = m;
        row.diag_mean = mean_d;
        row.diag_std = std::sqrt(std::max(0.0, m2_d / (n - 1)));
        row.offdiag_std = std::sqrt(std::max(0.0, m2_o / (n - 1)));
        row.diag_mean_shifted = sum_shift / n;
        out.rows.push_back(row);
    }

    std::vector<double> ms, off, dmean, dstd;
    for (const auto& r : out.rows) {
        ms.push_back(r.num_sites);
        off.push_back(r.offdiag_std);
        dmean.push_back(r.diag_mean_shifted);
        dstd.push_back(r.diag_std);
    }
    out.offdiag_std_slope = fit_loglog(ms, off);
    out.diag_mean_slope = fit_loglog(ms, dmean);
    out.diag_std_slope = fit_loglog(ms, dstd);
    return out;
}

void write_scaling_csv(std::ostream& os, const ScalingSummary& summary) {
    csv::write_header(os, {"M", "diag_mean", "diag_std", "offdiag_std"});
    for (const auto& r : summary.rows) {
        csv::write_row(os, {csv::format(static_cast<long long>(r.num_sites)), csv::format(r.diag_mean),
                            csv::format(r.diag_std), csv::format(r.offdiag_std)});
    }
}

namespace {

nlohmann::json fit_json(const SlopeFit& f) {
    if (!f.valid) return nlohmann::json{{"valid", false}, {"slope", nullptr}, {"ci95", nullptr}};
    return nlohmann::json{{"valid", true}, {"slope", f.slope}, {"intercept", f.intercept}, {"ci95", f.ci95}};
}

}  // namespace

nlohmann::json scaling_json(const ScalingSummary& summary) {
    nlohmann::json shifted = nlohmann::json::array();
    for (const auto& r : summary.rows) shifted.push_back({{"M", r.num_sites}, {"diag_mean", r.diag_mean_shifted}});
    return nlohmann::json{{"offdiag_std_slope", fit_json(summary.offdiag_std_slope)},
                          {"diag_mean_slope", fit_json(summary.diag_mean_slope)},
                          {"diag_std_slope", fit_json(summary.diag_std_slope)},
                          {"diag_mean_shifted", {{"v_mean", summary.shifted_v_mean}, {"rows", shifted}}}};
}

}  // namespace decohere
