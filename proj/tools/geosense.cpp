#include "geosense/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Geodesic-control frequency sensing simulator"};
    app.require_subcommand(1);

    std::string                  config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int>           threads;
    std::optional<std::string>   out_dir;
    bool                         quiet = false;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"run", "run the experiment the config describes"},
        {"scan", "frequency scan over sequence.grid"},
        {"heterodyne", "detuning scan of a lab-frame perpendicular signal"},
        {"robustness", "fidelity versus harmonic noise amplitude"},
        {"filter", "exact and reconstructed filter function"},
        {"syncread", "synchronized-readout photon trace and spectrum"},
        {"dump-sequence", "pulse table at the configured scan frequency"},
        {"dump-modulation", "toggling modulation function segments"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--threads", threads, "maximum worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "output directory (default from config)");
        sub->add_flag("-q,--quiet", quiet, "suppress warnings");
    }

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        geosense::ExperimentConfig cfg = geosense::load_config(config_path);
        geosense::apply_overrides(cfg, {seed, threads, out_dir});
        std::optional<geosense::ExperimentKind> as;
        if (command != "run") {
            as = geosense::parse_experiment_kind(command);
        }
        const geosense::RunReport rep = geosense::run(cfg, as);
        if (!quiet) {
            for (const auto& w : rep.warnings) {
                std::cerr << "warning: " << w << "\n";
            }
        }
        std::cout << rep.headline << "\n";
        for (const auto& f : rep.files) {
            std::cout << "  wrote " << f << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
