// Command-line front end for the experiment registry: validate configs, run
// single experiments, and expand sweep grids.  Exit codes: 0 on success, 2 on
// a validation failure, 3 on a runtime error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ulab/config.hpp"
#include "ulab/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

void print_violations(const std::vector<std::string>& violations) {
    for (const auto& v : violations) std::cerr << "violation: " << v << "\n";
}

void print_outputs(const nlohmann::json& manifest, const std::string& dir) {
    if (!manifest.contains("outputs")) return;
    for (const auto& o : manifest["outputs"])
        std::cout << "wrote " << dir << "/" << o["file"].get<std::string>() << " ("
                  << o["bytes"].get<std::uint64_t>() << " bytes)\n";
    std::cout << "wrote " << dir << "/manifest.json\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ulab: unitary Anderson model laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::uint64_t seed = 0;
    int workers = 0;

    CLI::App* run = app.add_subcommand("run", "validate and run one experiment");
    run->add_option("config", config_path, "config file")->required();
    CLI::Option* run_seed = run->add_option("--seed", seed, "override experiment.seed");
    CLI::Option* run_workers = run->add_option("--workers", workers, "override experiment.workers");
    CLI::Option* run_output = run->add_option("--output", output_dir, "output directory");

    CLI::App* validate = app.add_subcommand("validate", "report config violations");
    validate->add_option("config", config_path, "config file")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "run a Cartesian grid of config overrides");
    sweep->add_option("config", config_path, "config file")->required();
    CLI::Option* sweep_seed = sweep->add_option("--seed", seed, "override experiment.seed");
    CLI::Option* sweep_workers =
        sweep->add_option("--workers", workers, "override experiment.workers");
    CLI::Option* sweep_output = sweep->add_option("--output", output_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    ulab::Config config;
    try {
        config = ulab::Config::parse_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "violation: " << e.what() << "\n";
        return kExitValidation;
    }
    if (run_seed->count() || sweep_seed->count())
        config.set("experiment.seed", std::to_string(seed));
    if (run_workers->count() || sweep_workers->count())
        config.set("experiment.workers", std::to_string(workers));
    if (run_output->count() || sweep_output->count())
        config.set("experiment.output", output_dir);

    try {
        if (validate->parsed()) {
            std::vector<std::string> violations = ulab::validate_experiment(config);
            if (!violations.empty()) {
                print_violations(violations);
                return kExitValidation;
            }
            std::cout << "ok: " << config.get_string("experiment.name") << "\n";
            return kExitOk;
        }
        const std::string dir = ulab::resolve_output_dir(config);
        if (run->parsed()) {
            nlohmann::json manifest = ulab::run_experiment(config, dir);
            print_outputs(manifest, dir);
            return kExitOk;
        }
        nlohmann::json manifest = ulab::run_sweep(config, dir);
        if (manifest.empty()) {
            std::cout << "empty sweep grid: nothing to run\n";
            return kExitOk;
        }
        print_outputs(manifest, dir);
        return kExitOk;
    } catch (const ulab::ValidationError& e) {
        print_violations(e.violations);
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
