#include "fbac/experiment.hpp"
#include "fbac/kernels.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"phase-field free-boundary laboratory"};
    app.require_subcommand(1);

    std::string runConfig, valConfig, outDir;
    bool serial = false;

    CLI::App* run = app.add_subcommand("run", "execute one experiment config");
    run->add_option("config", runConfig, "flat key=value config file")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--out", outDir,
                    "output directory (wins over FBAC_OUT_DIR and the config)");
    run->add_flag("--serial", serial, "disable the parallel kernels");

    CLI::App* val = app.add_subcommand("validate", "check a config without running");
    val->add_option("config", valConfig, "flat key=value config file")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (val->parsed()) {
            const fbac::ExperimentConfig cfg = fbac::load_config(valConfig);
            const std::vector<std::string> violations = fbac::validate_experiment(cfg);
            if (violations.empty()) {
                std::puts("ok");
                return 0;
            }
            for (const std::string& v : violations)
                std::fprintf(stderr, "invalid: %s\n", v.c_str());
            return 1;
        }

        if (serial) fbac::kernels::set_parallel(false);
        if (!outDir.empty()) setenv("FBAC_OUT_DIR", outDir.c_str(), 1);
        const fbac::ExperimentConfig cfg = fbac::load_config(runConfig);
        const fbac::RunOutcome outcome = fbac::run_experiment(cfg);
        for (const std::string& n : outcome.notes)
            std::fprintf(stderr, "%s\n", n.c_str());
        return outcome.exit_code;
    } catch (const fbac::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
