#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "sphereflow/errors.hpp"
#include "sphereflow/run.hpp"

int main(int argc, char** argv) {
    using namespace sphereflow;
    run::apply_thread_env();

    CLI::App app{"mean-field attention dynamics on the sphere"};
    app.require_subcommand(1);

    std::string config_path, out_dir, name, suite = "all", out_path;
    std::uint64_t seed = 0;

    auto* sim = app.add_subcommand("simulate", "run a scenario config");
    sim->add_option("config", config_path, "TOML scenario config")->required();
    sim->add_option("--out", out_dir, "output directory override");

    auto* repro = app.add_subcommand("reproduce", "run a canonical scenario");
    repro->add_option("name", name,
                      "example-2-1|example-2-4|example-2-6|thm-2-2|thm-3-6|"
                      "main-thm-sweep")
        ->required();
    repro->add_option("--out", out_dir, "directory for the report file");

    auto* check = app.add_subcommand("check", "run a property suite");
    check->add_option("suite", suite, "geometry|fields|variations|inequalities|all")
        ->required();
    check->add_option("--seed", seed, "suite seed");
    check->add_option("--out", out_path, "report file path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? run::kExitOk : run::kExitConfig;
    }

    try {
        if (sim->parsed()) return run::cmd_simulate(config_path, out_dir);
        if (repro->parsed()) return run::cmd_reproduce(name, out_dir);
        if (check->parsed()) return run::cmd_check(suite, seed, out_path);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return run::kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return run::kExitRuntime;
    }
    return run::kExitConfig;
}
