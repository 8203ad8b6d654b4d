#include "decohere/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "decohere/errors.hpp"
#include "decohere/kernels.hpp"
#include "decohere/rng.hpp"

namespace decohere {

namespace {

void require_finite(double x, const std::string& what) {
    if (!std::isfinite(x)) throw NonFiniteError(what + " is not finite");
}

}  // namespace

ModelParams build_params(const ModelDescription& desc) {
    if (desc.num_sites < 1) throw DimensionError("M must be at least 1");
    const auto m = static_cast<std::size_t>(desc.num_sites);
    if (desc.omega.size() != m) {
        throw DimensionError("omega has length " + std::to_string(desc.omega.size()) + ", expected M = " +
                             std::to_string(m));
    }
    if (desc.coupling.size() != m) {
        throw DimensionError("v has length " + std::to_string(desc.coupling.size()) + ", expected M = " +
                             std::to_string(m));
    }
    require_finite(desc.tunneling, "E");
    for (std::size_t l = 0; l < m; ++l) {
        require_finite(desc.omega[l], "omega[" + std::to_string(l) + "]");
        for (int i = 0; i < 2; ++i)
            for (int s = 0; s < 2; ++s)
                require_finite(desc.coupling[l][i][s], "v[" + std::to_string(l) + "][" + std::to_string(i) + "][" +
                                                           std::to_string(s) + "]");
    }

    ModelParams p;
    p.num_sites_ = desc.num_sites;
    p.tunneling_ = desc.tunneling;
    p.omega_ = desc.omega;
    p.coupling_.reserve(4 * m);
    for (const auto& site : desc.coupling)
        for (const auto& row : site)
            for (double x : row) p.coupling_.push_back(x);
    p.seed_ = desc.seed;
    p.dist_ = desc.dist;
    return p;
}

double ModelParams::energy_scale() const {
    double scale = std::abs(tunneling_);
    for (int l = 0; l < num_sites_; ++l) {
        double vmax = 0.0;
        for (int k = 0; k < 4; ++k) vmax = std::max(vmax, std::abs(coupling_[4 * l + k]));
        scale += std::abs(omega_[l]) + vmax;
    }
    return scale;
}

bool ModelParams::is_pure_dephasing() const {
    return tunneling_ == 0.0 && std::all_of(omega_.begin(), omega_.end(), [](double w) { return w == 0.0; });
}

ModelDescription ModelParams::describe() const {
    ModelDescription d;
    d.num_sites = num_sites_;
    d.tunneling = tunneling_;
    d.omega = omega_;
    d.coupling.resize(num_sites_);
    for (int l = 0; l < num_sites_; ++l)
        for (int i = 0; i < 2; ++i)
            for (int s = 0; s < 2; ++s) d.coupling[l][i][s] = coupling_[4 * l + 2 * i + s];
    d.seed = seed_;
    d.dist = dist_;
    return d;
}

ModelParams sample_params(std::uint64_t seed, int num_sites, const SamplingSpec& dist) {
    if (num_sites < 1) throw DimensionError("M must be at least 1");
    const Rng root(seed);
    Rng omega_stream = root.split("omega");
    Rng coupling_stream = root.split("v");

    ModelDescription d;
    d.num_sites = num_sites;
    d.tunneling = dist.tunneling;
    d.omega.resize(num_sites);
    d.coupling.resize(num_sites);
    for (int l = 0; l < num_sites; ++l) d.omega[l] = omega_stream.uniform(dist.omega_min, dist.omega_max);
    for (int l = 0; l < num_sites; ++l)
        for (int i = 0; i < 2; ++i)
            for (int s = 0; s < 2; ++s)
                d.coupling[l][i][s] = dist.coupling * coupling_stream.uniform(-1.0, 1.0) + dist.v_shift;
    d.seed = seed;
    d.dist = dist;
    return build_params(d);
}

double h_I_diag(const ModelParams& params, Pointer s, EnvConfig nu) {
    double sum = 0.0;
    for (int l = 0; l < params.num_sites(); ++l) sum += params.coupling(l, s, site_bit(nu, l));
    return sum;
}

Hamiltonian::Hamiltonian(const ModelParams& params) : params_(params) {
    if (params.num_sites() > kMaxStateSites) {
        throw ResourceError("Hamiltonian diagonal for M = " + std::to_string(params.num_sites()) +
                            " exceeds the state-vector guard");
    }
    diag_.resize(2 * env_dim(params.num_sites()));
    kernels::parallel::interaction_diag(params.num_sites(), params.couplings(), diag_);
}

void Hamiltonian::apply(std::span<const cplx> in, std::span<cplx> out, HamiltonianPart part) const {
    if (in.size() != diag_.size() || out.size() != diag_.size()) {
        throw DimensionError("state dimension " + std::to_string(in.size()) + " does not match 2^(M+1) = " +
                             std::to_string(diag_.size()));
    }
    const kernels::HamiltonianTerms terms{params_.num_sites(), params_.tunneling(), params_.omegas(), diag_};
    kernels::parallel::apply_h(terms, part, in, out);
}

StateVector Hamiltonian::apply(const StateVector& psi, HamiltonianPart part) const {
    if (psi.num_sites() != params_.num_sites()) throw DimensionError("state has a different number of sites");
    StateVector out(params_.num_sites());
    apply(psi.amps(), out.amps(), part);
    return out;
}

double Hamiltonian::expectation(const StateVector& psi) const { return inner(psi, apply(psi)).real(); }

StateVector apply_h(const ModelParams& params, const StateVector& psi, HamiltonianPart part) {
    return Hamiltonian(params).apply(psi, part);
}

// --- JSON ---------------------------------------------------------------

void to_json(nlohmann::json& j, const SamplingSpec& spec) {
    j = nlohmann::json{{"E", spec.tunneling},
                       {"omega_min", spec.omega_min},
                       {"omega_max", spec.omega_max},
                       {"g", spec.coupling},
                       {"v_shift", spec.v_shift}};
}

void from_json(const nlohmann::json& j, SamplingSpec& spec) {
    spec = SamplingSpec{};
    spec.tunneling = j.value("E", spec.tunneling);
    spec.omega_min = j.value("omega_min", spec.omega_min);
    spec.omega_max = j.value("omega_max", spec.omega_max);
    spec.coupling = j.value("g", spec.coupling);
    spec.v_shift = j.value("v_shift", spec.v_shift);
}

nlohmann::json params_to_json(const ModelParams& params) {
    nlohmann::json v = nlohmann::json::array();
    for (int l = 0; l < params.num_sites(); ++l) {
        v.push_back({{params.coupling(l, Pointer::First, 0), params.coupling(l, Pointer::First, 1)},
                     {params.coupling(l, Pointer::Second, 0), params.coupling(l, Pointer::Second, 1)}});
    }
    nlohmann::json j{{"M", params.num_sites()},
                     {"E", params.tunneling()},
                     {"omega", std::vector<double>(params.omegas().begin(), params.omegas().end())},
                     {"v", v}};
    j["seed"] = params.seed() ? nlohmann::json(*params.seed()) : nlohmann::json(nullptr);
    j["dist"] = params.dist() ? nlohmann::json(*params.dist()) : nlohmann::json(nullptr);
    return j;
}

namespace {

double number_at(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

}  // namespace

ModelParams params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("", "model parameters must be a JSON object");
    for (const char* key : {"M", "E", "omega", "v"}) {
        if (!j.contains(key)) throw ConfigError(std::string("/") + key, "required field missing");
    }
    if (!j["M"].is_number_integer()) throw ConfigError("/M", "expected an integer");

    ModelDescription d;
    d.num_sites = j["M"].get<int>();
    d.tunneling = number_at(j["E"], "/E");
    if (!j["omega"].is_array()) throw ConfigError("/omega", "expected an array");
    for (std::size_t l = 0; l < j["omega"].size(); ++l)
        d.omega.push_back(number_at(j["omega"][l], "/omega/" + std::to_string(l)));
    if (!j["v"].is_array()) throw ConfigError("/v", "expected an array");
    for (std::size_t l = 0; l < j["v"].size(); ++l) {
        const auto& site = j["v"][l];
        const std::string path = "/v/" + std::to_string(l);
        if (!site.is_array() || site.size() != 2) throw ConfigError(path, "expected [[v1up, v1down], [v2up, v2down]]");
        SiteCoupling c{};
        for (int i = 0; i < 2; ++i) {
            if (!site[i].is_array() || site[i].size() != 2) throw ConfigError(path + "/" + std::to_string(i), "expected a pair");
            for (int s = 0; s < 2; ++s)
                c[i][s] = number_at(site[i][s], path + "/" + std::to_string(i) + "/" + std::to_string(s));
        }
        d.coupling.push_back(c);
    }
    if (j.contains("seed") && !j["seed"].is_null()) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("/seed", "expected a non-negative integer or null");
        d.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("dist") && !j["dist"].is_null()) {
        if (!j["dist"].is_object()) throw ConfigError("/dist", "expected an object or null");
        d.dist = j["dist"].get<SamplingSpec>();
    }
    try {
        return build_params(d);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", e.what());
    }
}

}  // namespace decohere
