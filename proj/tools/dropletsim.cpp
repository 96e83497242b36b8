// Command-line runner for the BEC single-mirror-feedback droplet simulator.
//
//   dropletsim run         --config run.cfg [--override key=value]...
//   dropletsim predict     --config run.cfg [--override key=value]...
//   dropletsim convergence --config run.cfg [--override key=value]...
//
// Exit codes: 0 ok, 2 config error, 3 physics-validity abort, 4 numerical failure.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "droplet/errors.hpp"
#include "droplet/run_config.hpp"
#include "droplet/sim_runner.hpp"

namespace {

int finish(const droplet::RunOutcome& outcome) {
    for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
    if (!outcome.message.empty()) {
        if (outcome.status == droplet::RunStatus::Ok) {
            std::cerr << outcome.message << "\n";
        } else {
            std::cerr << "error: " << outcome.message << "\n";
        }
    }
    return static_cast<int>(outcome.status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BEC single-mirror-feedback optomechanical droplet simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--override", overrides, "key=value applied on top of the config");
    };

    CLI::App* cmd_run = app.add_subcommand("run", "execute the mode selected in the config");
    CLI::App* cmd_predict =
        app.add_subcommand("predict", "report derived quantities without simulating");
    CLI::App* cmd_convergence =
        app.add_subcommand("convergence", "dt-halving convergence probe for the configured run");
    add_common(cmd_run);
    add_common(cmd_predict);
    add_common(cmd_convergence);

    CLI11_PARSE(app, argc, argv);

    droplet::RunConfig config;
    try {
        config = droplet::RunConfig::parse_file(config_path);
        for (const auto& assignment : overrides) config.apply_override(assignment);
    } catch (const droplet::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(droplet::RunStatus::ConfigFailure);
    }

    if (cmd_predict->parsed()) {
        config.mode = droplet::RunConfig::Mode::Predict;
        return finish(droplet::run(config, std::cout));
    }
    if (cmd_convergence->parsed()) {
        return finish(droplet::run_convergence_probe(config, std::cout));
    }
    return finish(droplet::run(config, std::cout));
}
