#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "decohere/errors.hpp"
#include "decohere/harness.hpp"

namespace {

struct SubcommandArgs {
    std::string config;
    decohere::Overrides overrides;
};

CLI::App* add_experiment(CLI::App& app, decohere::Experiment e, const std::string& help, SubcommandArgs& args) {
    CLI::App* sub = app.add_subcommand(decohere::to_string(e), help);
    sub->add_option("--config", args.config, "Run config JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", args.overrides.seed, "Override the master seed");
    sub->add_option("--out", args.overrides.out, "Override the output directory");
    sub->add_option("--m", args.overrides.num_sites, "Override the number of environment sites")->check(CLI::PositiveNumber);
    sub->add_option("--g", args.overrides.coupling, "Override the coupling scale")->check(CLI::NonNegativeNumber);
    sub->add_option("--jobs", args.overrides.jobs, "Concurrent sweep points")->check(CLI::PositiveNumber);
    return sub;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace decohere;

    CLI::App app{"Branch decoherence experiments for a two-level system coupled to a spin environment"};
    app.set_version_flag("--version", std::string(DECOHERE_VERSION));
    app.require_subcommand(1);

    SubcommandArgs args;
    std::optional<Experiment> chosen;
    const std::pair<Experiment, const char*> experiments[] = {
        {Experiment::Exact, "Exact propagation of the full state"},
        {Experiment::Diag, "Diagonal (adiabatic-phase) evolution of every branch"},
        {Experiment::Compare, "Fidelity of the diagonal approximation against exact propagation"},
        {Experiment::Scaling, "Diagonal and off-diagonal interaction statistics versus M"},
        {Experiment::Dephasing, "Closed-form pure-dephasing decoherence factor against exact propagation"},
        {Experiment::Landscape, "Phase landscape, extremal configurations and survival weights"},
        {Experiment::Notice, "Product-state check for the stationary-phase selection"},
    };
    for (const auto& [e, help] : experiments) {
        add_experiment(app, e, help, args)->callback([&chosen, e = e] { chosen = e; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        nlohmann::json raw = load_json_file(args.config);
        apply_overrides(raw, chosen, args.overrides);
        const RunConfig config = parse_config(raw);
        const RunManifest manifest = run(config);
        std::cout << (config.output_dir / "manifest.json").string() << '\n';
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error at " << (e.path().empty() ? "/" : e.path()) << ": " << e.what() << '\n';
        return kExitConfig;
    } catch (const ResourceError& e) {
        std::cerr << "resource guard: " << e.what() << '\n';
        return kExitResource;
    } catch (const NumericalGuardError& e) {
        std::cerr << "numerical guard: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
