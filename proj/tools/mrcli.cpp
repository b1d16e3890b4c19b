//
// mrcli: experiment runner for the metric-resolvent toolkit.
// Talks to the shared library exclusively through the C API.
//
//   mrcli run <config.json>... [--jobs N] [--negative-control]
//   mrcli validate <config.json>
//   mrcli catalog
//
// Exit codes: 0 all checks passed, 1 configuration or solve error,
// 2 check violations (reports are still written).
//

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mr/metric_resolvent.h"

int main(int argc, char** argv)
{
    CLI::App app{"metric-resolvent experiment runner"};
    app.require_subcommand(1);

    std::vector<std::string> configs;
    int jobs = 1;
    bool negative_control = false;
    CLI::App* run = app.add_subcommand(
        "run", "run experiments from JSON config files");
    run->add_option("configs", configs, "experiment config files")
        ->required()
        ->expected(-1);
    run->add_option("--jobs", jobs, "concurrent experiments")
        ->check(CLI::PositiveNumber);
    run->add_flag("--negative-control", negative_control,
                  "falsify rate-bound constants; checks must fail");

    std::string validate_path;
    CLI::App* validate = app.add_subcommand(
        "validate", "parse and validate a config without running");
    validate->add_option("config", validate_path, "config file")->required();

    CLI::App* catalog = app.add_subcommand(
        "catalog", "list algorithms, rate formulas, checks and generators");

    CLI11_PARSE(app, argc, argv);

    if (catalog->parsed()) {
        char* text = nullptr;
        if (mr_catalog(&text) != MR_OK) {
            std::fprintf(stderr, "error: %s\n", mr_last_error());
            return 1;
        }
        std::fputs(text, stdout);
        mr_string_free(text);
        return 0;
    }

    if (validate->parsed()) {
        int code = 0;
        if (mr_validate_config(validate_path.c_str(), &code) != MR_OK) {
            std::fprintf(stderr, "error: %s\n", mr_last_error());
            return 1;
        }
        if (code != 0) {
            std::fprintf(stderr, "invalid: %s\n", mr_last_error());
            return 1;
        }
        std::printf("ok: %s\n", validate_path.c_str());
        return 0;
    }

    // run
    if (configs.size() == 1 && jobs <= 1) {
        int code = 0;
        if (mr_run_experiment(configs[0].c_str(), negative_control ? 1 : 0,
                              &code) != MR_OK) {
            std::fprintf(stderr, "error: %s\n", mr_last_error());
            return 1;
        }
        if (code == 1)
            std::fprintf(stderr, "error: %s\n", mr_last_error());
        else if (code == 2)
            std::fprintf(stderr, "check violations reported: %s\n",
                         configs[0].c_str());
        return code;
    }

    std::vector<const char*> paths;
    paths.reserve(configs.size());
    for (const std::string& c : configs) paths.push_back(c.c_str());
    int code = 0;
    if (mr_run_experiment_batch(paths.data(), static_cast<int>(paths.size()),
                                jobs, negative_control ? 1 : 0,
                                &code) != MR_OK) {
        std::fprintf(stderr, "error: %s\n", mr_last_error());
        return 1;
    }
    return code;
}
