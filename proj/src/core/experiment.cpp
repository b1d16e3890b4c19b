#include "experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

#include "iterate.hpp"
#include "random.hpp"
#include "rates.hpp"

namespace mr {

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& why)
{
    throw Error(ErrorCode::config_error, path + ": " + why);
}

const nlohmann::json& need(const nlohmann::json& j, const std::string& key,
                           const std::string& path)
{
    if (!j.is_object() || !j.contains(key))
        config_error(path + "." + key, "missing field");
    return j.at(key);
}

double number_or(const nlohmann::json& j, const std::string& key, double dflt,
                 const std::string& path)
{
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number())
        config_error(path + "." + key, "expected a number");
    return j.at(key).get<double>();
}

struct Resolved {
    std::optional<SplittingProblem> problem;
    std::optional<AlgorithmKind> alg;
    AlgoParams params;
    std::optional<MonotoneBlockOperator> inline_op;
    std::optional<ResolventScheme> scheme;

    int max_iter = 1000;
    double eps = 1e-10;
    std::uint64_t seed = 0;
    Eigen::VectorXd b0;
    std::string ref_mode = "long_run"; // analytic | long_run | none | external
    Eigen::VectorXd external_ref;
    std::vector<std::string> checks;
    std::string trace_path, sidecar_path, report_path;
};

bool is_rate_check(const std::string& name)
{
    return rate_formula_from_name(name).has_value();
}

bool is_property_check(const std::string& name)
{
    for (const std::string& p : property_check_names())
        if (p == name) return true;
    return false;
}

bool needs_objective(RateFormula f)
{
    switch (f) {
    case RateFormula::objective_ergodic:
    case RateFormula::objective_nonergodic:
    case RateFormula::strong_objective:
    case RateFormula::strong_objective_rlinear:
        return true;
    default:
        return false;
    }
}

MonotoneBlockOperator operator_from_json(const nlohmann::json& j,
                                         const std::string& path)
{
    const nlohmann::json& blocks_j = need(j, "blocks", path);
    if (!blocks_j.is_array() || blocks_j.empty())
        config_error(path + ".blocks", "expected a nonempty array");
    std::vector<ProxFn> blocks;
    for (std::size_t i = 0; i < blocks_j.size(); ++i)
        blocks.push_back(proxfn_from_json(
            blocks_j[i], path + ".blocks[" + std::to_string(i) + "]"));
    Eigen::Index dim = 0;
    for (const ProxFn& b : blocks) dim += b.dim();
    Eigen::MatrixXd lin = Eigen::MatrixXd::Zero(dim, dim);
    if (j.contains("linear_part"))
        lin = matrix_from_json(j.at("linear_part"), path + ".linear_part");
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(dim);
    if (j.contains("shift")) {
        Eigen::MatrixXd m = matrix_from_json(j.at("shift"), path + ".shift");
        if (m.cols() != 1) config_error(path + ".shift", "expected cols = 1");
        shift = m.col(0);
    }
    double mu = number_or(j, "mu", 0.0, path);
    return MonotoneBlockOperator(std::move(blocks), std::move(lin),
                                 std::move(shift), mu);
}

void resolve_problem(const nlohmann::json& config, Resolved& out)
{
    const nlohmann::json& p = need(config, "problem", "config");
    if (p.contains("generator")) {
        const nlohmann::json& g = p.at("generator");
        std::string name =
            need(g, "name", "config.problem.generator").get<std::string>();
        int dim = static_cast<int>(
            number_or(g, "dim", 0.0, "config.problem.generator"));
        if (dim <= 0)
            config_error("config.problem.generator.dim",
                         "required and must be positive");
        if (!g.contains("seed"))
            config_error("config.problem.generator.seed",
                         "seeds are mandatory for generated problems");
        auto seed = g.at("seed").get<std::uint64_t>();
        std::string form = g.contains("form")
                               ? g.at("form").get<std::string>()
                               : std::string();
        if (name == "lasso") {
            if (form.empty() || form == "composite")
                out.problem = lasso_composite(dim, seed);
            else if (form == "two_block")
                out.problem = lasso_two_block(dim, seed);
            else if (form == "single")
                out.inline_op = lasso_single_operator(dim, seed);
            else
                config_error("config.problem.generator.form",
                             "lasso supports composite, two_block, single");
        } else if (name == "qp") {
            if (form.empty() || form == "equality")
                out.problem = qp_equality(dim, seed);
            else if (form == "operator")
                out.inline_op = qp_operator(dim, seed);
            else
                config_error("config.problem.generator.form",
                             "qp supports equality, operator");
        } else if (name == "basis_pursuit") {
            if (!form.empty() && form != "equality")
                config_error("config.problem.generator.form",
                             "basis_pursuit supports equality");
            out.problem = basis_pursuit(dim, seed);
        } else {
            config_error("config.problem.generator.name",
                         "unknown generator '" + name +
                             "' (lasso, qp, basis_pursuit)");
        }
        return;
    }
    if (p.contains("operator")) {
        out.inline_op =
            operator_from_json(p.at("operator"), "config.problem.operator");
        return;
    }
    out.problem = problem_from_json(p);
}

void resolve_algorithm(const nlohmann::json& config, Resolved& out)
{
    const nlohmann::json& a = need(config, "algorithm", "config");
    std::string name = need(a, "name", "config.algorithm").get<std::string>();
    const std::string ppath = "config.algorithm.params";
    nlohmann::json params =
        a.contains("params") ? a.at("params") : nlohmann::json::object();
    out.params = algo_params_from_json(params, ppath);

    if (auto alg = algorithm_from_name(name)) {
        if (!out.problem)
            config_error("config.algorithm.name",
                         "'" + name + "' needs a structured problem, not an "
                         "inline operator");
        out.alg = *alg;
        out.scheme = build_algorithm(*alg, *out.problem, out.params);
        return;
    }
    if (name == "proximal_point" || name == "km") {
        if (!out.inline_op)
            config_error("config.algorithm.name",
                         "'" + name + "' needs an operator problem (inline "
                         "spec or a single/operator generator form)");
        if (!(out.params.tau > 0.0))
            config_error(ppath + ".tau", "must be positive");
        Eigen::Index n = out.inline_op->dim();
        Metric q = Metric::classify(
            (1.0 / out.params.tau) * Eigen::MatrixXd::Identity(n, n));
        if (name == "km") {
            if (!(out.params.gamma > 0.0))
                config_error(ppath + ".gamma", "must be positive");
            out.scheme = ResolventScheme::make_relaxed(*out.inline_op,
                                                       std::move(q),
                                                       out.params.gamma);
        } else {
            out.scheme =
                ResolventScheme::make(*out.inline_op, std::move(q));
        }
        return;
    }
    config_error("config.algorithm.name", "unknown algorithm '" + name + "'");
}

void resolve_run(const nlohmann::json& config, Resolved& out)
{
    const nlohmann::json& r = need(config, "run", "config");
    out.max_iter =
        static_cast<int>(number_or(r, "max_iter", 1000.0, "config.run"));
    if (out.max_iter < 1)
        config_error("config.run.max_iter", "must be >= 1");
    out.eps = number_or(r, "eps", 1e-10, "config.run");
    if (!(out.eps > 0.0)) config_error("config.run.eps", "must be positive");
    if (!r.contains("seed"))
        config_error("config.run.seed", "seeds are mandatory");
    out.seed = r.at("seed").get<std::uint64_t>();

    Eigen::Index n = out.scheme->dim();
    if (!r.contains("b0") || r.at("b0") == "zero") {
        out.b0 = Eigen::VectorXd::Zero(n);
    } else if (r.at("b0") == "random") {
        std::mt19937_64 rng = make_rng(out.seed);
        out.b0 = gaussian_vector(n, rng);
    } else if (r.at("b0").is_array()) {
        if (r.at("b0").size() != static_cast<std::size_t>(n))
            config_error("config.run.b0",
                         "expected " + std::to_string(n) + " entries");
        out.b0.resize(n);
        for (Eigen::Index i = 0; i < n; ++i)
            out.b0(i) = r.at("b0")[static_cast<std::size_t>(i)].get<double>();
    } else {
        config_error("config.run.b0", "expected 'zero', 'random' or an array");
    }

    if (r.contains("reference")) {
        const nlohmann::json& ref = r.at("reference");
        if (ref.is_string()) {
            out.ref_mode = ref.get<std::string>();
            if (out.ref_mode != "analytic" && out.ref_mode != "long_run" &&
                out.ref_mode != "none")
                config_error("config.run.reference",
                             "expected analytic, long_run, none or "
                             "{external: path}");
        } else if (ref.is_object() && ref.contains("external")) {
            out.ref_mode = "external";
            std::string path = ref.at("external").get<std::string>();
            std::ifstream f(path);
            if (!f)
                config_error("config.run.reference.external",
                             "cannot open '" + path + "'");
            nlohmann::json arr = nlohmann::json::parse(f, nullptr, false);
            if (arr.is_discarded() || !arr.is_array() ||
                arr.size() != static_cast<std::size_t>(n))
                config_error("config.run.reference.external",
                             "expected a JSON array of " + std::to_string(n) +
                                 " numbers in '" + path + "'");
            out.external_ref.resize(n);
            for (Eigen::Index i = 0; i < n; ++i)
                out.external_ref(i) =
                    arr[static_cast<std::size_t>(i)].get<double>();
        } else {
            config_error("config.run.reference", "malformed reference spec");
        }
    }
}

void resolve_checks(const nlohmann::json& config, Resolved& out)
{
    const nlohmann::json& checks = need(config, "checks", "config");
    if (!checks.is_array())
        config_error("config.checks", "expected an array of check names");
    bool has_ref = out.ref_mode != "none";
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const std::string path = "config.checks[" + std::to_string(i) + "]";
        if (!checks[i].is_string())
            config_error(path, "expected a check name");
        std::string name = checks[i].get<std::string>();
        if (auto f = rate_formula_from_name(name)) {
            if (!has_ref)
                config_error(path, "'" + name + "' needs a reference");
            if (needs_objective(*f) && !out.scheme->op().has_objective())
                config_error(path, "'" + name +
                                       "' needs an operator with a potential");
            bool q_based = *f != RateFormula::generalized_sequential;
            if (q_based && !out.scheme->metric().is_symmetric_psd())
                config_error(path, "'" + name +
                                       "' needs a symmetric PSD metric");
        } else if (is_property_check(name)) {
            if ((name == "fejer_S" || name == "kkt") && !has_ref)
                config_error(path, "'" + name + "' needs a reference");
            if (name == "seq_decrease_bracket") {
                if (!out.scheme->scalar_correction() ||
                    std::abs(out.scheme->gamma() - 1.0) > 1e-14)
                    config_error(path, "'" + name +
                                           "' needs the plain iteration");
                if (!out.scheme->op().has_objective())
                    config_error(path,
                                 "'" + name +
                                     "' needs an operator with a potential");
            }
            if (name == "averagedness") {
                if (!out.scheme->scalar_correction() ||
                    !(out.scheme->gamma() > 0.0) ||
                    !(out.scheme->gamma() < 2.0))
                    config_error(path, "'" + name +
                                           "' needs a scalar relaxation in "
                                           "(0, 2)");
                if (!out.scheme->metric().is_symmetric_psd())
                    config_error(path, "'" + name +
                                           "' needs a symmetric PSD metric");
            }
            if ((name == "kkt" || name == "twin_equivalence") && !out.alg)
                config_error(path, "'" + name +
                                       "' needs a structured problem and a "
                                       "gallery algorithm");
        } else {
            config_error(path, "unknown check '" + name + "'");
        }
        out.checks.push_back(std::move(name));
    }
}

std::string rooted(const std::string& path)
{
    if (path.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    const char* root = std::getenv("MR_OUTPUT_ROOT");
    if (!root || !*root) return path;
    return (std::filesystem::path(root) / p).string();
}

void resolve_output(const nlohmann::json& config, Resolved& out)
{
    const nlohmann::json& o = need(config, "output", "config");
    out.trace_path =
        rooted(need(o, "trace_path", "config.output").get<std::string>());
    out.report_path =
        rooted(need(o, "report_path", "config.output").get<std::string>());
    out.sidecar_path =
        o.contains("sidecar_path")
            ? rooted(o.at("sidecar_path").get<std::string>())
            : out.trace_path + ".meta.json";
}

Resolved resolve(const nlohmann::json& config)
{
    if (!config.is_object()) config_error("config", "expected a JSON object");
    Resolved out;
    resolve_problem(config, out);
    resolve_algorithm(config, out);
    resolve_run(config, out);
    resolve_checks(config, out);
    resolve_output(config, out);
    return out;
}

nlohmann::json property_entry(const std::string& name, bool pass,
                              double worst_slack, nlohmann::json details)
{
    nlohmann::json e;
    e["name"] = name;
    e["type"] = "property";
    e["pass"] = pass;
    e["worst_slack"] = worst_slack;
    e["details"] = std::move(details);
    return e;
}

nlohmann::json trace_check_entry(const TraceCheckReport& rep)
{
    nlohmann::json d;
    d["checked"] = rep.checked;
    d["violations"] = rep.violation_ks;
    return property_entry(rep.name, rep.pass, rep.worst_slack, std::move(d));
}

} // namespace

std::vector<std::string> property_check_names()
{
    return {"firm_nonexpansive",   "averagedness",
            "fejer_S",             "residual_decrease_S",
            "seq_decrease_bracket", "residual_q_monotone",
            "kkt",                 "twin_equivalence"};
}

AlgoParams algo_params_from_json(const nlohmann::json& params,
                                 const std::string& path)
{
    if (!params.is_object())
        config_error(path, "expected a parameter object");
    AlgoParams out;
    out.tau = number_or(params, "tau", 0.0, path);
    out.sigma = number_or(params, "sigma", 0.0, path);
    out.gamma = number_or(params, "gamma", 0.0, path);
    out.rho = number_or(params, "rho", 0.0, path);
    if (params.contains("P1"))
        out.p1 = matrix_from_json(params.at("P1"), path + ".P1");
    if (params.contains("P2"))
        out.p2 = matrix_from_json(params.at("P2"), path + ".P2");
    return out;
}

ExperimentOutcome run_experiment_json(const nlohmann::json& config,
                                      bool negative_control)
{
    ExperimentOutcome out;
    std::optional<Resolved> r;
    try {
        r = resolve(config);
    } catch (const Error& e) {
        out.exit_code = 1;
        out.message = e.what();
        return out;
    }

    try {
        const ResolventScheme& scheme = *r->scheme;

        std::optional<Eigen::VectorXd> reference;
        if (r->ref_mode == "external") {
            reference = r->external_ref;
        } else if (r->ref_mode != "none") {
            reference =
                compute_reference(scheme, r->b0, 10 * r->max_iter);
        }

        RunOptions opts;
        opts.max_iter = r->max_iter;
        opts.eps = r->eps;
        opts.reference = reference;
        IterationTrace trace = run_iteration(scheme, r->b0, opts);
        if (trace.stop_reason == StopReason::solver_error ||
            trace.stop_reason == StopReason::divergence_guard) {
            out.exit_code = 1;
            out.message = "run failed (" +
                          std::string(to_string(trace.stop_reason)) + ") " +
                          trace.error_message;
            return out;
        }

        std::optional<double> h_star;
        if (reference && scheme.op().has_objective())
            h_star = *scheme.op().objective_value(*reference);

        nlohmann::json entries = nlohmann::json::array();
        bool all_pass = true;
        for (const std::string& name : r->checks) {
            if (auto f = rate_formula_from_name(name)) {
                RateBound bound =
                    make_rate_bound(*f, scheme, r->b0, *reference, h_star);
                if (negative_control) {
                    // shrink the distance constants far below any real
                    // trajectory so a working checker must trip
                    bound.constants["dist0_Q"] *= 1e-6;
                    bound.constants["dist0_S"] *= 1e-6;
                }
                RateReport rep = check_trace(bound, trace, scheme);
                nlohmann::json e =
                    nlohmann::json::parse(rate_report_json(rep));
                e["name"] = name;
                e["type"] = "rate";
                entries.push_back(e);
                all_pass = all_pass && rep.pass;
                continue;
            }
            if (name == "firm_nonexpansive") {
                auto reps =
                    check_partial_nonexpansive(scheme, 200, r->seed + 1);
                bool pass = true;
                double worst = std::numeric_limits<double>::infinity();
                nlohmann::json d = nlohmann::json::array();
                for (const auto& rep : reps) {
                    pass = pass && rep.pass;
                    worst = std::min(worst, rep.worst_margin);
                    d.push_back({{"name", rep.name},
                                 {"worst_margin", rep.worst_margin},
                                 {"pass", rep.pass}});
                }
                entries.push_back(
                    property_entry(name, pass, worst, std::move(d)));
                all_pass = all_pass && pass;
            } else if (name == "averagedness") {
                PropertyReport rep =
                    check_averagedness(scheme, 200, r->seed + 2);
                entries.push_back(property_entry(
                    name, rep.pass, rep.worst_margin,
                    {{"samples", rep.samples}}));
                all_pass = all_pass && rep.pass;
            } else if (name == "fejer_S") {
                TraceCheckReport rep =
                    check_fejer_S(trace, scheme, *reference);
                entries.push_back(trace_check_entry(rep));
                all_pass = all_pass && rep.pass;
            } else if (name == "residual_decrease_S") {
                TraceCheckReport rep =
                    check_residual_decrease_S(trace, scheme);
                entries.push_back(trace_check_entry(rep));
                all_pass = all_pass && rep.pass;
            } else if (name == "seq_decrease_bracket") {
                TraceCheckReport rep =
                    check_seq_decrease_bracket(trace, scheme);
                entries.push_back(trace_check_entry(rep));
                all_pass = all_pass && rep.pass;
            } else if (name == "residual_q_monotone") {
                TraceCheckReport rep = check_residual_q_monotone(trace);
                entries.push_back(trace_check_entry(rep));
                all_pass = all_pass && rep.pass;
            } else if (name == "kkt") {
                KktReport rep = kkt_residual(*r->alg, *r->problem, r->params,
                                             *reference);
                double worst =
                    1e-7 - std::max(rep.feasibility, rep.stationarity);
                entries.push_back(property_entry(
                    name, rep.pass, worst,
                    {{"feasibility", rep.feasibility},
                     {"stationarity", rep.stationarity}}));
                all_pass = all_pass && rep.pass;
            } else if (name == "twin_equivalence") {
                NativeTwin twin = make_native(*r->alg, *r->problem, r->params);
                int steps = std::min(200, r->max_iter);
                double drift = twin_max_drift(scheme, twin, r->b0, steps);
                bool pass = drift < 1e-10;
                entries.push_back(property_entry(
                    name, pass, 1e-10 - drift,
                    {{"max_drift", drift}, {"steps", steps}}));
                all_pass = all_pass && pass;
            }
        }

        write_trace_csv(trace, r->trace_path);
        write_trace_sidecar(trace, scheme, r->sidecar_path);

        nlohmann::json report;
        report["checks"] = entries;
        report["pass"] = all_pass;
        report["negative_control"] = negative_control;
        report["trace"] = {{"path", r->trace_path},
                           {"sidecar", r->sidecar_path},
                           {"steps", trace.steps},
                           {"stop_reason", to_string(trace.stop_reason)}};
        std::ofstream rf(r->report_path, std::ios::binary);
        if (!rf)
            throw Error(ErrorCode::io_error,
                        "cannot open report file: " + r->report_path);
        rf << report.dump(2) << '\n';
        out.report = std::move(report);
        out.exit_code = all_pass ? 0 : 2;
        return out;
    } catch (const Error& e) {
        out.exit_code = 1;
        out.message = e.what();
        return out;
    }
}

ExperimentOutcome run_experiment_file(const std::string& config_path,
                                      bool negative_control)
{
    std::ifstream f(config_path);
    if (!f) {
        ExperimentOutcome out;
        out.exit_code = 1;
        out.message = "cannot open config file: " + config_path;
        return out;
    }
    nlohmann::json config = nlohmann::json::parse(f, nullptr, false);
    if (config.is_discarded()) {
        ExperimentOutcome out;
        out.exit_code = 1;
        out.message = "config is not valid JSON: " + config_path;
        return out;
    }
    return run_experiment_json(config, negative_control);
}

int run_experiment_batch(const std::vector<std::string>& config_paths,
                         int jobs, bool negative_control)
{
    if (jobs < 1) jobs = 1;
    std::vector<int> codes(config_paths.size(), 0);
    std::size_t next = 0;
    while (next < config_paths.size()) {
        std::size_t batch =
            std::min<std::size_t>(jobs, config_paths.size() - next);
        std::vector<std::future<int>> futs;
        for (std::size_t i = 0; i < batch; ++i) {
            const std::string& path = config_paths[next + i];
            futs.push_back(std::async(std::launch::async, [&, path] {
                return run_experiment_file(path, negative_control).exit_code;
            }));
        }
        for (std::size_t i = 0; i < batch; ++i)
            codes[next + i] = futs[i].get();
        next += batch;
    }
    int overall = 0;
    for (int c : codes) {
        if (c == 1) return 1;
        if (c == 2) overall = 2;
    }
    return overall;
}

int validate_config_file(const std::string& config_path, std::string* message)
{
    std::ifstream f(config_path);
    if (!f) {
        if (message) *message = "cannot open config file: " + config_path;
        return 1;
    }
    nlohmann::json config = nlohmann::json::parse(f, nullptr, false);
    if (config.is_discarded()) {
        if (message) *message = "config is not valid JSON: " + config_path;
        return 1;
    }
    try {
        resolve(config);
    } catch (const Error& e) {
        if (message) *message = e.what();
        return 1;
    }
    if (message) message->clear();
    return 0;
}

std::string catalog_text()
{
    std::ostringstream out;
    out << "algorithms (" << all_algorithms().size() + 2 << "):\n";
    out << "  relaxed_admm         two-block constrained template; params "
           "tau > 0, gamma in (0, 2); gamma = 1 is the standard method\n";
    out << "  proximal_admm        two-block constrained template with "
           "symmetric PSD proximal weights P1, P2; params tau > 0\n";
    out << "  pdhg_mp              composite template, simultaneous "
           "primal-dual updates; params sigma, tau with "
           "sigma*tau*||A||^2 < 1\n";
    out << "  pdhg_mu              composite template with a lagged primal "
           "iterate; same parameter condition\n";
    out << "  alm                  linear-equality template, multiplier "
           "ascent; params tau > 0\n";
    out << "  linearized_alm       linear-equality template with a "
           "linearized penalty; params tau > 0, rho > tau*||A^T A||\n";
    out << "  linearized_bregman   linear-equality template, lagged "
           "gradient form; params tau > 0, 1/rho >= ||A^T A||\n";
    out << "  proximal_point       plain iteration on an operator problem; "
           "params tau > 0\n";
    out << "  km                   relaxed iteration on an operator "
           "problem; params tau > 0, gamma > 0\n";
    out << "rate formulas (" << kRateFormulaCount << "):\n";
    for (RateFormula fo : all_rate_formulas()) {
        RateBound b{fo, {}};
        out << "  " << to_string(fo) << "  [valid: "
            << b.validity_description() << "]\n";
    }
    auto props = property_check_names();
    out << "property checks (" << props.size() << "):\n";
    for (const std::string& p : props) out << "  " << p << "\n";
    out << "problem generators (3):\n";
    out << "  lasso            l1-regularized least squares with an "
           "orthogonal-column design; forms: composite, two_block, single\n";
    out << "  qp               equality-constrained strongly convex "
           "quadratic program; forms: equality, operator\n";
    out << "  basis_pursuit    min ||x||_1 s.t. Ax = c with a consistent "
           "sparse ground truth; form: equality\n";
    return out.str();
}

} // namespace mr
