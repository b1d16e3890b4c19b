#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "core/experiment.hpp"
#include "core/rates.hpp"

using namespace mr;
namespace fs = std::filesystem;

namespace {

struct OutputDir {
    fs::path dir;
    explicit OutputDir(const std::string& name)
        : dir(fs::temp_directory_path() / name)
    {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    std::string path(const std::string& file) const
    {
        return (dir / file).string();
    }
};

nlohmann::json pdhg_lasso_config(const OutputDir& out, double sigma_scale)
{
    nlohmann::json config;
    config["problem"] = {
        {"generator",
         {{"name", "lasso"}, {"form", "composite"}, {"dim", 12}, {"seed", 7}}}};
    config["algorithm"] = {
        {"name", "pdhg_mp"},
        {"params", {{"sigma", sigma_scale}, {"tau", 0.4}}}};
    config["run"] = {{"max_iter", 300},
                     {"eps", 1e-14},
                     {"seed", 3},
                     {"b0", "random"},
                     {"reference", "long_run"}};
    config["checks"] = {"picard_sequential", "generalized_sequential",
                        "firm_nonexpansive", "fejer_S",
                        "residual_decrease_S", "twin_equivalence", "kkt"};
    config["output"] = {{"trace_path", out.path("trace.csv")},
                        {"report_path", out.path("report.json")}};
    return config;
}

} // namespace

TEST_CASE("full pipeline on a primal-dual lasso run")
{
    OutputDir out("mr_exp_pipeline");
    nlohmann::json config = pdhg_lasso_config(out, 0.4);
    ExperimentOutcome outcome = run_experiment_json(config);
    CAPTURE(outcome.message);
    CHECK(outcome.exit_code == 0);
    CHECK(fs::exists(out.path("trace.csv")));
    CHECK(fs::exists(out.path("trace.csv.meta.json")));
    CHECK(fs::exists(out.path("report.json")));

    // report completeness: every requested check exactly once, with a
    // pass flag and worst slack
    auto requested = config["checks"];
    REQUIRE(outcome.report.contains("checks"));
    CHECK(outcome.report["checks"].size() == requested.size());
    for (const auto& name : requested) {
        int hits = 0;
        for (const auto& entry : outcome.report["checks"]) {
            if (entry["name"] == name) {
                ++hits;
                CHECK(entry.contains("pass"));
                CHECK(entry.contains("worst_slack"));
                CHECK(entry["pass"].get<bool>());
            }
        }
        CHECK(hits == 1);
    }
}

TEST_CASE("inadmissible parameters exit 1 and name the condition")
{
    OutputDir out("mr_exp_bad_params");
    nlohmann::json config = pdhg_lasso_config(out, 9.0); // sigma*tau*||A||^2 > 1
    ExperimentOutcome outcome = run_experiment_json(config);
    CHECK(outcome.exit_code == 1);
    CHECK(outcome.message.find("sigma*tau*||A||^2") != std::string::npos);
}

TEST_CASE("negative control forces check violations")
{
    OutputDir out("mr_exp_negative");
    nlohmann::json config = pdhg_lasso_config(out, 0.4);
    config["checks"] = {"picard_sequential"};
    ExperimentOutcome outcome = run_experiment_json(config, true);
    CHECK(outcome.exit_code == 2);
    bool any_violations = false;
    for (const auto& entry : outcome.report["checks"])
        if (!entry["violations"].empty()) any_violations = true;
    CHECK(any_violations);
}

TEST_CASE("identical config and seed give bit-identical traces")
{
    OutputDir out("mr_exp_det");
    nlohmann::json config = pdhg_lasso_config(out, 0.4);
    config["checks"] = nlohmann::json::array();
    REQUIRE(run_experiment_json(config).exit_code == 0);
    std::ifstream f1(out.path("trace.csv"), std::ios::binary);
    std::string first((std::istreambuf_iterator<char>(f1)),
                      std::istreambuf_iterator<char>());
    REQUIRE(run_experiment_json(config).exit_code == 0);
    std::ifstream f2(out.path("trace.csv"), std::ios::binary);
    std::string second((std::istreambuf_iterator<char>(f2)),
                       std::istreambuf_iterator<char>());
    CHECK(first == second);
    CHECK(!first.empty());
}

TEST_CASE("config validation points at the offending field")
{
    OutputDir out("mr_exp_validate");
    nlohmann::json config = pdhg_lasso_config(out, 0.4);

    SUBCASE("missing seed")
    {
        config["run"].erase("seed");
        ExperimentOutcome outcome = run_experiment_json(config);
        CHECK(outcome.exit_code == 1);
        CHECK(outcome.message.find("config.run.seed") != std::string::npos);
    }
    SUBCASE("unknown check name")
    {
        config["checks"].push_back("definitely_not_a_check");
        ExperimentOutcome outcome = run_experiment_json(config);
        CHECK(outcome.exit_code == 1);
        CHECK(outcome.message.find("config.checks[") != std::string::npos);
    }
    SUBCASE("objective check on a potential-free operator")
    {
        config["checks"] = {"objective_nonergodic"}; // skew coupling
        ExperimentOutcome outcome = run_experiment_json(config);
        CHECK(outcome.exit_code == 1);
        CHECK(outcome.message.find("potential") != std::string::npos);
    }
    SUBCASE("validate file entry point")
    {
        std::string path = out.path("config.json");
        {
            std::ofstream f(path);
            f << config.dump();
        }
        std::string message;
        CHECK(validate_config_file(path, &message) == 0);
        CHECK(message.empty());
    }
}

TEST_CASE("proximal-point experiment on the single-operator lasso form")
{
    OutputDir out("mr_exp_ppa");
    nlohmann::json config;
    config["problem"] = {
        {"generator",
         {{"name", "lasso"}, {"form", "single"}, {"dim", 10}, {"seed", 11}}}};
    config["algorithm"] = {{"name", "proximal_point"},
                           {"params", {{"tau", 1.0}}}};
    config["run"] = {{"max_iter", 400},
                     {"eps", 1e-14},
                     {"seed", 5},
                     {"b0", "random"},
                     {"reference", "long_run"}};
    config["checks"] = {"objective_nonergodic", "objective_ergodic",
                        "seq_decrease_bracket", "residual_q_monotone",
                        "picard_sequential"};
    config["output"] = {{"trace_path", out.path("trace.csv")},
                        {"report_path", out.path("report.json")}};
    ExperimentOutcome outcome = run_experiment_json(config);
    CAPTURE(outcome.message);
    CHECK(outcome.exit_code == 0);
}

TEST_CASE("batch mode runs independent configs concurrently")
{
    OutputDir out("mr_exp_batch");
    std::vector<std::string> paths;
    for (int i = 0; i < 2; ++i) {
        nlohmann::json config = pdhg_lasso_config(out, 0.4);
        config["checks"] = {"picard_sequential"};
        config["output"] = {
            {"trace_path", out.path("trace" + std::to_string(i) + ".csv")},
            {"report_path", out.path("report" + std::to_string(i) + ".json")}};
        std::string path = out.path("config" + std::to_string(i) + ".json");
        std::ofstream f(path);
        f << config.dump();
        paths.push_back(path);
    }
    CHECK(run_experiment_batch(paths, 2) == 0);
    CHECK(fs::exists(out.path("report0.json")));
    CHECK(fs::exists(out.path("report1.json")));
}

TEST_CASE("catalog lists the full surface")
{
    std::string text = catalog_text();
    CHECK(text.find("relaxed_admm") != std::string::npos);
    CHECK(text.find("rate formulas (12):") != std::string::npos);
    CHECK(text.find("problem generators (3):") != std::string::npos);
    // all twelve formulas present by name
    for (RateFormula f : all_rate_formulas())
        CHECK(text.find(to_string(f)) != std::string::npos);
}

TEST_CASE("output root environment variable prefixes relative paths")
{
    OutputDir out("mr_exp_rooted");
    setenv("MR_OUTPUT_ROOT", out.dir.string().c_str(), 1);
    nlohmann::json config = pdhg_lasso_config(out, 0.4);
    config["checks"] = nlohmann::json::array();
    config["output"] = {{"trace_path", "rooted_trace.csv"},
                        {"report_path", "rooted_report.json"}};
    ExperimentOutcome outcome = run_experiment_json(config);
    unsetenv("MR_OUTPUT_ROOT");
    CHECK(outcome.exit_code == 0);
    CHECK(fs::exists(out.path("rooted_trace.csv")));
    CHECK(fs::exists(out.path("rooted_report.json")));
}
