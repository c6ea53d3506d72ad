#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <stdexcept>

#include "ptc/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Predefined-time consensus experiment driver"};
    std::string config_path;
    std::string preset;
    std::uint64_t seed = 42;
    std::string out_dir = "out";
    bool quiet = false;
    app.add_option("--config", config_path, "Path to a JSON experiment config");
    app.add_option("--preset", preset,
                   "Preset experiment: example1|example2|example3|example4|certify");
    app.add_option("--seed", seed, "Root seed for all randomness");
    app.add_option("--out", out_dir, "Output directory for CSV and summary");
    app.add_flag("--quiet", quiet, "Suppress summary output");
    CLI11_PARSE(app, argc, argv);

    try {
        if (config_path.empty() == preset.empty()) {
            std::cerr << "error: exactly one of --config or --preset is required\n";
            return ptc::kExitConfigError;
        }
        const ptc::ExperimentConfig cfg =
            config_path.empty() ? ptc::ExperimentConfig::preset(preset)
                                : ptc::ExperimentConfig::from_json_file(config_path);
        const ptc::RunResult result =
            ptc::run_experiment(cfg, seed, out_dir, quiet, std::cout);
        return result.exit_code;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ptc::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "run failure: " << e.what() << "\n";
        return ptc::kExitRunFailure;
    }
}
