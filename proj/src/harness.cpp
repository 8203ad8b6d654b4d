#include "decohere/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#include "decohere/csv.hpp"
#include "decohere/errors.hpp"
#include "decohere/rng.hpp"
#include "decohere/scaling.hpp"
#include "decohere/stationary.hpp"

namespace decohere {

using nlohmann::json;

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::Exact: return "exact";
        case Experiment::Diag: return "diag";
        case Experiment::Compare: return "compare";
        case Experiment::Scaling: return "scaling";
        case Experiment::Dephasing: return "dephasing";
        case Experiment::Landscape: return "landscape";
        case Experiment::Notice: return "notice";
    }
    return "unknown";
}

std::optional<Experiment> experiment_from_string(const std::string& name) {
    for (Experiment e : {Experiment::Exact, Experiment::Diag, Experiment::Compare, Experiment::Scaling,
                         Experiment::Dephasing, Experiment::Landscape, Experiment::Notice})
        if (to_string(e) == name) return e;
    return std::nullopt;
}

// --- Config parsing --------------------------------------------------------------

namespace {

void allow_only(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; }))
            throw ConfigError(path + "/" + k, "unknown field");
    }
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
    return x;
}

double number_or(const json& parent, const char* key, const std::string& path, double fallback) {
    if (!parent.contains(key) || parent[key].is_null()) return fallback;
    return number(parent[key], path + "/" + key);
}

int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<int>();
}

std::uint64_t unsigned_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer() || (!j.is_number_unsigned() && j.get<std::int64_t>() < 0))
        throw ConfigError(path, "expected a non-negative integer");
    return j.get<std::uint64_t>();
}

cplx complex_value(const json& j, const std::string& path) {
    if (j.is_number()) return {number(j, path), 0.0};
    if (!j.is_array() || j.size() != 2) throw ConfigError(path, "expected a number or [re, im]");
    return {number(j[0], path + "/0"), number(j[1], path + "/1")};
}

std::pair<cplx, cplx> normalized_pair(const json& a, const json& b, const std::string& pa, const std::string& pb) {
    const cplx x = complex_value(a, pa);
    const cplx y = complex_value(b, pb);
    const double n = std::sqrt(std::norm(x) + std::norm(y));
    if (!(n > 0.0)) throw ConfigError(pa, "amplitudes must not both vanish");
    return {x / n, y / n};
}

void parse_model(const json& j, RunConfig& cfg) {
    const std::string path = "/model";
    allow_only(j, path, {"params", "sample"});
    if (j.contains("params") == j.contains("sample"))
        throw ConfigError(path, "exactly one of 'params' or 'sample' is required");
    if (j.contains("params")) {
        try {
            cfg.explicit_params = params_from_json(j["params"]);
        } catch (const ConfigError& e) {
            throw ConfigError(path + "/params" + e.path(), e.what());
        }
        cfg.num_sites = cfg.explicit_params->num_sites();
        return;
    }
    const json& s = j["sample"];
    const std::string sp = path + "/sample";
    allow_only(s, sp, {"M", "E", "omega_min", "omega_max", "g", "v_shift"});
    if (!s.contains("M")) throw ConfigError(sp + "/M", "required field missing");
    cfg.num_sites = integer(s["M"], sp + "/M");
    if (cfg.num_sites < 1) throw ConfigError(sp + "/M", "must be >= 1");
    SamplingSpec d;
    d.tunneling = number_or(s, "E", sp, d.tunneling);
    d.omega_min = number_or(s, "omega_min", sp, d.omega_min);
    d.omega_max = number_or(s, "omega_max", sp, d.omega_max);
    d.coupling = number_or(s, "g", sp, d.coupling);
    d.v_shift = number_or(s, "v_shift", sp, d.v_shift);
    if (d.omega_max < d.omega_min) throw ConfigError(sp + "/omega_max", "must be >= omega_min");
    if (d.coupling < 0.0) throw ConfigError(sp + "/g", "must be >= 0");
    cfg.dist = d;
}

void parse_ensemble(const json& j, RunConfig& cfg) {
    const std::string path = "/ensemble";
    allow_only(j, path, {"mode", "K", "c1", "c2"});
    if (j.contains("mode")) {
        if (!j["mode"].is_string()) throw ConfigError(path + "/mode", "expected a string");
        const auto mode = j["mode"].get<std::string>();
        if (mode == "bloch-random")
            cfg.ensemble.mode = EnsembleMode::BlochRandom;
        else if (mode == "product")
            cfg.ensemble.mode = EnsembleMode::Product;
        else if (mode == "polarized")
            cfg.ensemble.mode = EnsembleMode::Polarized;
        else
            throw ConfigError(path + "/mode", "expected one of bloch-random, product, polarized");
    }
    if (j.contains("K") && !j["K"].is_null()) {
        const int k = integer(j["K"], path + "/K");
        if (k < 1) throw ConfigError(path + "/K", "must be >= 1");
        cfg.ensemble.sample_size = static_cast<std::size_t>(k);
    }
    if (j.contains("c1") != j.contains("c2")) throw ConfigError(path, "c1 and c2 must be given together");
    if (j.contains("c1")) {
        if (cfg.ensemble.mode != EnsembleMode::Product) throw ConfigError(path + "/c1", "only valid in product mode");
        cfg.ensemble.product_amps = normalized_pair(j["c1"], j["c2"], path + "/c1", path + "/c2");
    }
}

void parse_initial_state(const json& j, RunConfig& cfg) {
    const std::string path = "/initial_state";
    allow_only(j, path, {"kind", "c1", "c2", "sites"});
    const std::string kind = j.value("kind", std::string("ensemble"));
    if (kind == "ensemble") {
        cfg.initial_state.kind = InitialStateSpec::Kind::Ensemble;
        if (j.contains("c1") || j.contains("sites")) throw ConfigError(path, "c1/c2/sites only valid for kind=product");
        return;
    }
    if (kind != "product") throw ConfigError(path + "/kind", "expected ensemble or product");
    cfg.initial_state.kind = InitialStateSpec::Kind::Product;
    if (j.contains("c1") != j.contains("c2")) throw ConfigError(path, "c1 and c2 must be given together");
    if (j.contains("c1")) cfg.initial_state.system = normalized_pair(j["c1"], j["c2"], path + "/c1", path + "/c2");
    if (j.contains("sites")) {
        const json& s = j["sites"];
        if (!s.is_array()) throw ConfigError(path + "/sites", "expected an array of [a, b] pairs");
        std::vector<std::pair<cplx, cplx>> sites;
        for (std::size_t l = 0; l < s.size(); ++l) {
            const std::string p = path + "/sites/" + std::to_string(l);
            if (!s[l].is_array() || s[l].size() != 2) throw ConfigError(p, "expected [a, b]");
            sites.push_back(normalized_pair(s[l][0], s[l][1], p + "/0", p + "/1"));
        }
        cfg.initial_state.sites = std::move(sites);
    }
}

bool needs_seed(const RunConfig& cfg) {
    if (!cfg.explicit_params) return true;
    switch (cfg.experiment) {
        case Experiment::Scaling: return true;
        case Experiment::Exact:
        case Experiment::Dephasing:
            if (cfg.initial_state.kind == InitialStateSpec::Kind::Product)
                return !cfg.initial_state.system || !cfg.initial_state.sites;
            break;
        default: break;
    }
    if (cfg.ensemble.mode == EnsembleMode::Product && cfg.ensemble.product_amps && !cfg.ensemble.sample_size) return false;
    return true;
}

}  // namespace

void apply_overrides(json& raw, std::optional<Experiment> experiment, const Overrides& o) {
    if (!raw.is_object()) throw ConfigError("", "config must be a JSON object");
    if (experiment) {
        if (raw.contains("experiment") && raw["experiment"] != to_string(*experiment))
            throw ConfigError("/experiment", "config is for '" + raw["experiment"].dump() + "' but subcommand is '" +
                                                 to_string(*experiment) + "'");
        raw["experiment"] = to_string(*experiment);
    }
    if (o.seed) raw["seed"] = *o.seed;
    if (o.out) raw["output"] = *o.out;
    if (o.jobs) raw["jobs"] = *o.jobs;
    if (o.num_sites || o.coupling) {
        if (raw.contains("model") && raw["model"].contains("params"))
            throw ConfigError("/model/params", "--m/--g only apply to sampled models");
        json& sample = raw["model"]["sample"];
        if (o.num_sites) sample["M"] = *o.num_sites;
        if (o.coupling) sample["g"] = *o.coupling;
    }
}

RunConfig parse_config(const json& raw) {
    allow_only(raw, "", {"experiment", "seed", "model", "ensemble", "initial_state", "grid", "method", "max_step",
                         "output", "scaling", "landscape", "notice", "sweep", "jobs", "$schema", "comment"});
    RunConfig cfg;
    cfg.raw = raw;

    if (!raw.contains("experiment") || !raw["experiment"].is_string())
        throw ConfigError("/experiment", "required string field missing");
    const auto exp = experiment_from_string(raw["experiment"].get<std::string>());
    if (!exp) throw ConfigError("/experiment", "unknown experiment '" + raw["experiment"].get<std::string>() + "'");
    cfg.experiment = *exp;

    if (raw.contains("seed") && !raw["seed"].is_null()) cfg.seed = unsigned_integer(raw["seed"], "/seed");
    if (raw.contains("output")) {
        if (!raw["output"].is_string()) throw ConfigError("/output", "expected a path string");
        cfg.output_dir = raw["output"].get<std::string>();
    }
    if (raw.contains("jobs")) {
        cfg.jobs = integer(raw["jobs"], "/jobs");
        if (cfg.jobs < 1) throw ConfigError("/jobs", "must be >= 1");
    }
    if (raw.contains("method")) {
        const std::string m = raw["method"].is_string() ? raw["method"].get<std::string>() : "";
        if (m == "rk4")
            cfg.method = PropagationMethod::Rk4;
        else if (m == "eig")
            cfg.method = PropagationMethod::Eig;
        else
            throw ConfigError("/method", "expected rk4 or eig");
    }
    if (raw.contains("max_step")) {
        cfg.max_step = number(raw["max_step"], "/max_step");
        if (!(*cfg.max_step > 0.0)) throw ConfigError("/max_step", "must be > 0");
    }

    if (cfg.experiment == Experiment::Scaling) {
        if (!raw.contains("scaling")) throw ConfigError("/scaling", "required for experiment=scaling");
        const json& s = raw["scaling"];
        allow_only(s, "/scaling", {"M_list", "samples", "t", "mean_shift_fraction", "sampling"});
        if (!s.contains("M_list") || !s["M_list"].is_array()) throw ConfigError("/scaling/M_list", "required array missing");
        for (std::size_t i = 0; i < s["M_list"].size(); ++i) {
            const int m = integer(s["M_list"][i], "/scaling/M_list/" + std::to_string(i));
            if (m < 8) throw ConfigError("/scaling/M_list/" + std::to_string(i), "must be >= 8");
            cfg.scaling_sizes.push_back(m);
        }
        if (cfg.scaling_sizes.size() < 3) throw ConfigError("/scaling/M_list", "at least 3 sizes are needed to fit a slope");
        if (s.contains("samples")) cfg.scaling_samples = integer(s["samples"], "/scaling/samples");
        if (cfg.scaling_samples < 2) throw ConfigError("/scaling/samples", "must be >= 2");
        cfg.scaling_t = number_or(s, "t", "/scaling", cfg.scaling_t);
        cfg.mean_shift_fraction = number_or(s, "mean_shift_fraction", "/scaling", cfg.mean_shift_fraction);
        if (raw.contains("model")) {
            parse_model(raw["model"], cfg);
            if (cfg.explicit_params) throw ConfigError("/model/params", "scaling draws its own models; use 'sample'");
        }
    } else {
        if (!raw.contains("model")) throw ConfigError("/model", "required field missing");
        parse_model(raw["model"], cfg);
        if (!raw.contains("grid")) throw ConfigError("/grid", "required field missing");
        const json& g = raw["grid"];
        allow_only(g, "/grid", {"t0", "t1", "n_steps"});
        if (!g.contains("t1")) throw ConfigError("/grid/t1", "required field missing");
        if (!g.contains("n_steps")) throw ConfigError("/grid/n_steps", "required field missing");
        const double t0 = number_or(g, "t0", "/grid", 0.0);
        const double t1 = number(g["t1"], "/grid/t1");
        const int n = integer(g["n_steps"], "/grid/n_steps");
        try {
            cfg.grid.emplace(t0, t1, n);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("/grid", e.what());
        }
    }

    if (raw.contains("ensemble")) parse_ensemble(raw["ensemble"], cfg);
    if (raw.contains("initial_state")) parse_initial_state(raw["initial_state"], cfg);
    if (cfg.experiment == Experiment::Dephasing) {
        if (raw.contains("initial_state") && cfg.initial_state.kind != InitialStateSpec::Kind::Product)
            throw ConfigError("/initial_state/kind", "dephasing needs a product initial state");
        cfg.initial_state.kind = InitialStateSpec::Kind::Product;
        if (cfg.initial_state.sites && static_cast<int>(cfg.initial_state.sites->size()) != cfg.num_sites)
            throw ConfigError("/initial_state/sites", "one site state per environment site required");
    }
    if (cfg.initial_state.sites && static_cast<int>(cfg.initial_state.sites->size()) != cfg.num_sites)
        throw ConfigError("/initial_state/sites", "one site state per environment site required");

    if (raw.contains("landscape")) {
        const json& l = raw["landscape"];
        allow_only(l, "/landscape", {"t", "tol", "radius"});
        if (l.contains("t")) cfg.landscape_t = number(l["t"], "/landscape/t");
        if (l.contains("tol") && !l["tol"].is_null()) cfg.selection_tol = number(l["tol"], "/landscape/tol");
        if (l.contains("radius")) cfg.radius = integer(l["radius"], "/landscape/radius");
        if (cfg.radius < 1) throw ConfigError("/landscape/radius", "must be >= 1");
    }
    if (raw.contains("notice")) {
        allow_only(raw["notice"], "/notice", {"tol"});
        cfg.notice_tol = number_or(raw["notice"], "tol", "/notice", cfg.notice_tol);
    }
    if (raw.contains("sweep")) {
        if (cfg.experiment != Experiment::Compare) throw ConfigError("/sweep", "only supported for experiment=compare");
        const json& s = raw["sweep"];
        allow_only(s, "/sweep", {"seeds", "g"});
        if (cfg.explicit_params) throw ConfigError("/sweep", "sweeps need a sampled model");
        if (s.contains("seeds")) {
            if (!s["seeds"].is_array()) throw ConfigError("/sweep/seeds", "expected an array");
            for (std::size_t i = 0; i < s["seeds"].size(); ++i)
                cfg.sweep_seeds.push_back(unsigned_integer(s["seeds"][i], "/sweep/seeds/" + std::to_string(i)));
        }
        if (s.contains("g")) {
            if (!s["g"].is_array()) throw ConfigError("/sweep/g", "expected an array");
            for (std::size_t i = 0; i < s["g"].size(); ++i)
                cfg.sweep_couplings.push_back(number(s["g"][i], "/sweep/g/" + std::to_string(i)));
        }
    }

    if (!cfg.seed && needs_seed(cfg) && cfg.sweep_seeds.empty())
        throw ConfigError("/seed", "a seed is required for sampled quantities");
    return cfg;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
    }
}

// --- Files -----------------------------------------------------------------------

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("/output", "cannot write " + tmp.string());
        out << contents;
        if (!out) throw ConfigError("/output", "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// --- Experiments --------------------------------------------------------------------

namespace {

class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw ConfigError("/output", "cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    template <typename Fn>
    void write(const std::string& name, Fn&& fill) {
        std::ostringstream os;
        os.imbue(std::locale::classic());
        fill(os);
        write_file_atomic(dir_ / name, os.str());
        files_.push_back(name);
    }

    const std::filesystem::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

void guard_exact(int num_sites) {
    if (num_sites > kMaxStateSites) {
        throw ResourceError("exact propagation limited to M <= " + std::to_string(kMaxStateSites) + " (2^" +
                            std::to_string(kMaxStateSites + 1) + " amplitudes); got M = " + std::to_string(num_sites));
    }
}

ModelParams resolve_model(const RunConfig& cfg, std::uint64_t seed, std::optional<double> coupling = std::nullopt) {
    if (cfg.explicit_params) return *cfg.explicit_params;
    SamplingSpec d = cfg.dist;
    if (coupling) d.coupling = *coupling;
    return sample_params(seed, cfg.num_sites, d);
}

BranchEnsemble resolve_ensemble(const RunConfig& cfg, int num_sites, std::uint64_t seed) {
    return make_ensemble(num_sites, cfg.ensemble, Rng(seed).split("ensemble"));
}

struct ProductInit {
    cplx c1, c2;
    std::vector<std::pair<cplx, cplx>> sites;
};

ProductInit resolve_product(const RunConfig& cfg, int num_sites, std::uint64_t seed) {
    Rng rng = Rng(seed).split("initial");
    ProductInit p;
    std::tie(p.c1, p.c2) = cfg.initial_state.system.value_or(rng.split("system").bloch_state());
    if (cfg.initial_state.sites) {
        p.sites = *cfg.initial_state.sites;
    } else {
        Rng sites = rng.split("sites");
        for (int l = 0; l < num_sites; ++l) p.sites.push_back(sites.bloch_state());
    }
    return p;
}

StateVector initial_state(const RunConfig& cfg, const ModelParams& params, std::uint64_t seed, double t0,
                          std::optional<BranchEnsemble>& ensemble_out) {
    if (cfg.initial_state.kind == InitialStateSpec::Kind::Product) {
        const ProductInit p = resolve_product(cfg, params.num_sites(), seed);
        return product_state(p.c1, p.c2, p.sites);
    }
    ensemble_out.emplace(resolve_ensemble(cfg, params.num_sites(), seed));
    std::vector<cplx> w(ensemble_out->size());
    for (std::size_t b = 0; b < w.size(); ++b) w[b] = (*ensemble_out)[b].alpha0;
    return branch_superposition(params, *ensemble_out, t0, w);
}

PropagateOptions propagate_options(const RunConfig& cfg) {
    PropagateOptions o;
    o.method = cfg.method;
    o.max_step = cfg.max_step;
    return o;
}

struct CompareRow {
    double t, fidelity, norm_diag, abs_r_exact, abs_r_diag;
};

struct CompareResult {
    ModelParams params;
    bool sampled = false;
    Trajectory exact;
    std::vector<CompareRow> rows;
};

double abs_or_nan(const std::optional<cplx>& r) {
    return r ? std::abs(*r) : std::numeric_limits<double>::quiet_NaN();
}

CompareResult compare_point(const RunConfig& cfg, std::uint64_t seed, std::optional<double> coupling) {
    ModelParams params = resolve_model(cfg, seed, coupling);
    guard_exact(params.num_sites());
    const TimeGrid& grid = *cfg.grid;
    const BranchEnsemble ens = resolve_ensemble(cfg, params.num_sites(), seed);
    const PhaseRecordSet phases = evolve_diagonal(params, ens, grid);
    const StateVector psi0 = assemble_state(params, ens, phases, grid.t0());

    PropagateOptions opts = propagate_options(cfg);
    opts.snapshot_all = true;
    Trajectory traj = propagate(psi0, params, grid, opts);

    CompareResult res{params, ens.sampled(), {}, {}};
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const StateVector approx = assemble_state(params, ens, phases, grid.time(k));
        const StateVector& exact = traj.snapshots.at(k);
        res.rows.push_back({grid.time(k), fidelity(approx, exact), approx.norm(), abs_or_nan(traj.points[k].r),
                            abs_or_nan(decoherence_factor(approx))});
    }
    traj.snapshots.clear();
    res.exact = std::move(traj);
    return res;
}

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
    csv::write_header(os, {"t", "fidelity", "norm_diag", "abs_r_exact", "abs_r_diag"});
    for (const auto& r : rows)
        csv::write_row(os, {csv::format(r.t), csv::format(r.fidelity), csv::format(r.norm_diag),
                            csv::format(r.abs_r_exact), csv::format(r.abs_r_diag)});
}

std::string tag(double x) {
    std::string s = csv::format(x);
    std::replace(s.begin(), s.end(), '.', 'p');
    std::replace(s.begin(), s.end(), '-', 'm');
    return s;
}

void run_compare(const RunConfig& cfg, std::uint64_t seed, ArtifactWriter& out, json& manifest) {
    if (cfg.sweep_seeds.empty() && cfg.sweep_couplings.empty()) {
        const CompareResult res = compare_point(cfg, seed, std::nullopt);
        out.write("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, res.exact); });
        out.write("compare.csv", [&](std::ostream& os) { write_compare_csv(os, res.rows); });
        manifest["model"] = params_to_json(res.params);
        manifest["ensemble_sampled"] = res.sampled;
        return;
    }

    std::vector<std::uint64_t> seeds = cfg.sweep_seeds;
    if (seeds.empty()) seeds.push_back(seed);
    std::vector<double> couplings = cfg.sweep_couplings;
    if (couplings.empty()) couplings.push_back(cfg.dist.coupling);
    const std::size_t n = seeds.size() * couplings.size();
    std::vector<std::optional<CompareResult>> results(n);
    std::vector<std::exception_ptr> errors(n);

    // Sweep points are independent; each owns its result slot.
#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs) if (cfg.jobs > 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            results[i].emplace(compare_point(cfg, seeds[i / couplings.size()], couplings[i % couplings.size()]));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    json models = json::array();
    std::ostringstream summary;
    summary.imbue(std::locale::classic());
    csv::write_header(summary, {"seed", "g", "fidelity_min", "fidelity_final"});
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t s = seeds[i / couplings.size()];
        const double g = couplings[i % couplings.size()];
        const CompareResult& res = *results[i];
        out.write("compare_s" + std::to_string(s) + "_g" + tag(g) + ".csv",
                  [&](std::ostream& os) { write_compare_csv(os, res.rows); });
        double fmin = 1.0;
        for (const auto& r : res.rows) fmin = std::min(fmin, r.fidelity);
        csv::write_row(summary, {std::to_string(s), csv::format(g), csv::format(fmin), csv::format(res.rows.back().fidelity)});
        models.push_back({{"seed", s}, {"g", g}, {"params", params_to_json(res.params)}});
    }
    out.write("sweep.csv", [&](std::ostream& os) { os << summary.str(); });
    manifest["model"] = models;
}

void run_dephasing(const RunConfig& cfg, std::uint64_t seed, ArtifactWriter& out, json& manifest) {
    const ModelParams params = resolve_model(cfg, seed);
    if (!params.is_pure_dephasing())
        throw ConfigError("/model", "dephasing requires the pure-dephasing limit E = 0 and omega = 0");
    manifest["model"] = params_to_json(params);
    const TimeGrid& grid = *cfg.grid;
    const ProductInit init = resolve_product(cfg, params.num_sites(), seed);
    const auto closed = dephasing_closed_form(params, init.c1, init.c2, init.sites, grid);

    std::optional<Trajectory> traj;
    if (params.num_sites() <= kMaxStateSites) {
        traj = propagate(product_state(init.c1, init.c2, init.sites), params, grid, propagate_options(cfg));
        out.write("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, *traj); });
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.write("dephasing.csv", [&](std::ostream& os) {
        csv::write_header(os, {"t", "re_r_closed", "im_r_closed", "abs_r_closed", "re_r_exact", "im_r_exact", "abs_r_exact"});
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const cplx rc = closed[k].value_or(cplx(nan, nan));
            const std::optional<cplx> re = traj ? traj->points[k].r : std::nullopt;
            const cplx rx = re.value_or(cplx(nan, nan));
            csv::write_row(os, {csv::format(grid.time(k)), csv::format(rc.real()), csv::format(rc.imag()),
                                csv::format(abs_or_nan(closed[k])), csv::format(rx.real()), csv::format(rx.imag()),
                                csv::format(abs_or_nan(re))});
        }
    });
}

void run_landscape(const RunConfig& cfg, std::uint64_t seed, ArtifactWriter& out, json& manifest) {
    const ModelParams params = resolve_model(cfg, seed);
    manifest["model"] = params_to_json(params);
    const TimeGrid& grid = *cfg.grid;
    const BranchEnsemble ens = resolve_ensemble(cfg, params.num_sites(), seed);
    manifest["ensemble_sampled"] = ens.sampled();
    const PhaseRecordSet phases = evolve_diagonal(params, ens, grid);
    const double t = cfg.landscape_t.value_or(grid.t1());
    const auto k = grid.index_of(t);
    if (!k) throw ConfigError("/landscape/t", "must be a grid point");

    const Landscape land = build_landscape(ens, phases, *k);
    const SelectionResult sel = select_extremal(land, cfg.selection_tol);
    const auto weights = survival_weights(land, cfg.radius);
    out.write("landscape.csv", [&](std::ostream& os) { write_landscape_csv(os, land, sel, weights); });
    out.write("selection.json", [&](std::ostream& os) { os << selection_json(sel).dump(2) << '\n'; });

    out.write("envelope.csv", [&](std::ostream& os) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        csv::write_header(os, {"t", "n_minima", "n_maxima", "Lambda_min_c", "Lambda_max_c"});
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const Landscape lj = build_landscape(ens, phases, j);
            const SelectionResult sj = select_extremal(lj, cfg.selection_tol);
            double lo = nan, hi = nan;
            for (EnvConfig nu : sj.minima) {
                const double x = lj[*lj.find(nu)].Lambda;
                lo = std::isnan(lo) ? x : std::min(lo, x);
            }
            for (EnvConfig nu : sj.maxima) {
                const double x = lj[*lj.find(nu)].Lambda;
                hi = std::isnan(hi) ? x : std::max(hi, x);
            }
            csv::write_row(os, {csv::format(grid.time(j)), csv::format(static_cast<long long>(sj.minima.size())),
                                csv::format(static_cast<long long>(sj.maxima.size())), csv::format(lo), csv::format(hi)});
        }
    });
}

}  // namespace

RunManifest run(const RunConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    const std::uint64_t seed = cfg.seed.value_or(0);
    ArtifactWriter out(cfg.output_dir);
    json manifest{{"experiment", to_string(cfg.experiment)},
                  {"config", cfg.raw},
                  {"code_version", DECOHERE_VERSION},
                  {"seed", cfg.seed ? json(*cfg.seed) : json(nullptr)}};

    switch (cfg.experiment) {
        case Experiment::Exact: {
            guard_exact(cfg.num_sites);
            const ModelParams params = resolve_model(cfg, seed);
            manifest["model"] = params_to_json(params);
            std::optional<BranchEnsemble> ens;
            const StateVector psi0 = initial_state(cfg, params, seed, cfg.grid->t0(), ens);
            if (ens) manifest["ensemble_sampled"] = ens->sampled();
            const Trajectory traj = propagate(psi0, params, *cfg.grid, propagate_options(cfg));
            out.write("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
            break;
        }
        case Experiment::Diag: {
            const ModelParams params = resolve_model(cfg, seed);
            manifest["model"] = params_to_json(params);
            const BranchEnsemble ens = resolve_ensemble(cfg, params.num_sites(), seed);
            manifest["ensemble_sampled"] = ens.sampled();
            const PhaseRecordSet phases = evolve_diagonal(params, ens, *cfg.grid);
            out.write("phases.csv", [&](std::ostream& os) { write_phases_csv(os, ens, phases); });
            break;
        }
        case Experiment::Compare:
            guard_exact(cfg.num_sites);
            run_compare(cfg, seed, out, manifest);
            break;
        case Experiment::Scaling: {
            ScalingRequest req;
            req.sizes = cfg.scaling_sizes;
            req.seed = seed;
            req.t = cfg.scaling_t;
            req.samples = cfg.scaling_samples;
            req.dist = cfg.dist;
            req.mean_shift_fraction = cfg.mean_shift_fraction;
            const ScalingSummary summary = scaling_stats(req);
            manifest["model"] = json{{"sampling", cfg.dist}};
            out.write("scaling.csv", [&](std::ostream& os) { write_scaling_csv(os, summary); });
            out.write("scaling.json", [&](std::ostream& os) { os << scaling_json(summary).dump(2) << '\n'; });
            break;
        }
        case Experiment::Dephasing: run_dephasing(cfg, seed, out, manifest); break;
        case Experiment::Landscape: run_landscape(cfg, seed, out, manifest); break;
        case Experiment::Notice: {
            const ModelParams params = resolve_model(cfg, seed);
            manifest["model"] = params_to_json(params);
            const BranchEnsemble ens = resolve_ensemble(cfg, params.num_sites(), seed);
            manifest["ensemble_sampled"] = ens.sampled();
            const PhaseRecordSet phases = evolve_diagonal(params, ens, *cfg.grid);
            const double t = cfg.landscape_t.value_or(cfg.grid->t1());
            if (!cfg.grid->index_of(t)) throw ConfigError("/landscape/t", "must be a grid point");
            const NoticeReport rep = notice_check(ens, phases, t, cfg.notice_tol);
            out.write("notice.json", [&](std::ostream& os) { os << notice_json(rep).dump(2) << '\n'; });
            break;
        }
    }

    RunManifest result;
    json files = json::array();
    for (const auto& name : out.files()) {
        const auto path = out.dir() / name;
        files.push_back({{"path", name}, {"sha256", sha256_file(path)}, {"bytes", std::filesystem::file_size(path)}});
        result.files.push_back(path);
    }
    manifest["files"] = files;
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_file_atomic(out.dir() / "manifest.json", manifest.dump(2) + "\n");
    result.document = std::move(manifest);
    return result;
}

}  // namespace decohere
