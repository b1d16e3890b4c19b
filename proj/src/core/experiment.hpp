/*=============================================================================
 * Experiment runner: loads a JSON configuration, builds the requested
 * scheme, runs the iteration, evaluates the requested rate bounds and
 * property checks, and writes the trace CSV, its JSON sidecar, and a
 * verification report.
 *
 * Exit discipline: 0 when every requested check passes, 2 when a checker
 * reports violations (the report is still written), 1 for configuration
 * or solve errors.
 *============================================================================*/
#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "splitting.hpp"

namespace mr {

struct ExperimentOutcome {
    int exit_code = 0;        // 0 pass, 1 config/solve error, 2 violations
    std::string message;      // populated for exit 1
    nlohmann::json report;    // full verification report
};

/* The negative-control switch falsifies the distance constant of every
 * rate bound before checking, so a healthy checker must report
 * violations. */
ExperimentOutcome run_experiment_json(const nlohmann::json& config,
                                      bool negative_control = false);
ExperimentOutcome run_experiment_file(const std::string& config_path,
                                      bool negative_control = false);

/* independent configs on a small thread pool; isolated outputs assumed */
int run_experiment_batch(const std::vector<std::string>& config_paths,
                         int jobs, bool negative_control = false);

/* parse + semantic validation only; returns 0 or 1 and fills message */
int validate_config_file(const std::string& config_path,
                         std::string* message);

/* builders, rate formulas, property checks, shipped generators */
std::string catalog_text();

/* names accepted in the config's "checks" list, property side */
std::vector<std::string> property_check_names();

/* {"tau": .., "sigma": .., "gamma": .., "rho": .., "P1": {..}, "P2": {..}} */
AlgoParams algo_params_from_json(const nlohmann::json& params,
                                 const std::string& path);

} // namespace mr
