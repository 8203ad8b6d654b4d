#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "decohere/branch.hpp"
#include "decohere/evolver.hpp"
#include "decohere/model.hpp"

namespace decohere {

enum class Experiment { Exact, Diag, Compare, Scaling, Dephasing, Landscape, Notice };

std::string to_string(Experiment e);
std::optional<Experiment> experiment_from_string(const std::string& name);

struct InitialStateSpec {
    enum class Kind { Ensemble, Product } kind = Kind::Ensemble;
    std::optional<std::pair<cplx, cplx>> system;
    std::optional<std::vector<std::pair<cplx, cplx>>> sites;
};

struct RunConfig {
    Experiment experiment = Experiment::Exact;
    std::optional<std::uint64_t> seed;

    // Exactly one of explicit_params / sampled model.
    std::optional<ModelParams> explicit_params;
    int num_sites = 0;
    SamplingSpec dist{};

    EnsembleSpec ensemble{};
    InitialStateSpec initial_state{};
    std::optional<TimeGrid> grid;
    PropagationMethod method = PropagationMethod::Rk4;
    std::optional<double> max_step;
    std::filesystem::path output_dir = "out";

    // scaling
    std::vector<int> scaling_sizes;
    int scaling_samples = 200;
    double scaling_t = 10.0;
    double mean_shift_fraction = 0.5;

    // landscape / notice
    std::optional<double> landscape_t;
    std::optional<double> selection_tol;
    int radius = 1;
    double notice_tol = 1e-10;

    // compare sweep
    std::vector<std::uint64_t> sweep_seeds;
    std::vector<double> sweep_couplings;

    int jobs = 1;

    /// Effective configuration document (after overrides), echoed in the manifest.
    nlohmann::json raw;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> num_sites;
    std::optional<double> coupling;
    std::optional<int> jobs;
};

/// Applies CLI overrides to a raw config document. --m / --g only apply to sampled models.
void apply_overrides(nlohmann::json& raw, std::optional<Experiment> experiment, const Overrides& overrides);

/// Validates against the published schema (schemas/run_config.schema.json);
/// throws ConfigError naming the offending field.
RunConfig parse_config(const nlohmann::json& raw);

nlohmann::json load_json_file(const std::filesystem::path& path);

struct RunManifest {
    nlohmann::json document;
    std::vector<std::filesystem::path> files;
};

/// Runs one experiment, writes its artifacts atomically (temp file + rename)
/// and writes manifest.json last. Throws ConfigError, ResourceError or
/// NumericalGuardError.
RunManifest run(const RunConfig& config);

/// Exit codes of the CLI: 0 success, 2 config error, 3 resource guard, 4 numerical guard.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitResource = 3, kExitNumerical = 4 };

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Write `contents` to `path` via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace decohere
