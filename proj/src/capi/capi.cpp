//
// capi.cpp
// C wrapper over the core library: opaque handles, thread-local error
// text, status codes mirroring mr::ErrorCode.
//

#include "mr/metric_resolvent.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "core/experiment.hpp"
#include "core/iterate.hpp"
#include "core/rates.hpp"
#include "core/splitting.hpp"

namespace {

thread_local std::string g_last_error;

mr_status map_code(mr::ErrorCode code)
{
    switch (code) {
    case mr::ErrorCode::ok: return MR_OK;
    case mr::ErrorCode::invalid_argument: return MR_ERR_INVALID_ARGUMENT;
    case mr::ErrorCode::dimension_mismatch: return MR_ERR_DIMENSION;
    case mr::ErrorCode::unsupported: return MR_ERR_UNSUPPORTED;
    case mr::ErrorCode::singular_system: return MR_ERR_SINGULAR;
    case mr::ErrorCode::residual_failure: return MR_ERR_RESIDUAL;
    case mr::ErrorCode::not_converged: return MR_ERR_NOT_CONVERGED;
    case mr::ErrorCode::config_error: return MR_ERR_CONFIG;
    case mr::ErrorCode::io_error: return MR_ERR_IO;
    case mr::ErrorCode::internal: return MR_ERR_INTERNAL;
    }
    return MR_ERR_INTERNAL;
}

mr_status fail(mr_status status, const std::string& message)
{
    g_last_error = message;
    return status;
}

template <typename Fn> mr_status guarded(Fn&& fn)
{
    try {
        return fn();
    } catch (const mr::Error& e) {
        return fail(map_code(e.code()), e.what());
    } catch (const std::exception& e) {
        return fail(MR_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(MR_ERR_INTERNAL, "unknown error");
    }
}

char* dup_string(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

nlohmann::json parse_json(const char* text, const char* what)
{
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw mr::Error(mr::ErrorCode::config_error,
                        std::string(what) + " is not valid JSON");
    return j;
}

} // namespace

struct mr_problem {
    mr::SplittingProblem value;
};

struct mr_scheme {
    std::shared_ptr<const mr::ResolventScheme> value;
};

struct mr_trace {
    mr::IterationTrace value;
    std::shared_ptr<const mr::ResolventScheme> scheme; // for the sidecar
};

extern "C" {

const char* mr_status_name(mr_status status)
{
    switch (status) {
    case MR_OK: return "ok";
    case MR_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case MR_ERR_DIMENSION: return "dimension_mismatch";
    case MR_ERR_UNSUPPORTED: return "unsupported";
    case MR_ERR_SINGULAR: return "singular_system";
    case MR_ERR_RESIDUAL: return "residual_failure";
    case MR_ERR_NOT_CONVERGED: return "not_converged";
    case MR_ERR_CONFIG: return "config_error";
    case MR_ERR_IO: return "io_error";
    case MR_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* mr_last_error(void) { return g_last_error.c_str(); }

mr_status mr_problem_from_json(const char* json_text, mr_problem** out)
{
    if (!json_text || !out)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        nlohmann::json j = parse_json(json_text, "problem");
        *out = new mr_problem{mr::problem_from_json(j)};
        return MR_OK;
    });
}

mr_status mr_problem_generate(const char* name, const char* form, int dim,
                              uint64_t seed, mr_problem** out)
{
    if (!name || !out)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        std::string n(name);
        std::string f(form ? form : "");
        if (n == "lasso") {
            if (f.empty() || f == "composite")
                *out = new mr_problem{mr::lasso_composite(dim, seed)};
            else if (f == "two_block")
                *out = new mr_problem{mr::lasso_two_block(dim, seed)};
            else
                throw mr::Error(mr::ErrorCode::invalid_argument,
                                "lasso forms: composite, two_block");
        } else if (n == "qp") {
            if (!f.empty() && f != "equality")
                throw mr::Error(mr::ErrorCode::invalid_argument,
                                "qp form: equality");
            *out = new mr_problem{mr::qp_equality(dim, seed)};
        } else if (n == "basis_pursuit") {
            if (!f.empty() && f != "equality")
                throw mr::Error(mr::ErrorCode::invalid_argument,
                                "basis_pursuit form: equality");
            *out = new mr_problem{mr::basis_pursuit(dim, seed)};
        } else {
            throw mr::Error(mr::ErrorCode::invalid_argument,
                            "unknown generator '" + n +
                                "' (lasso, qp, basis_pursuit)");
        }
        return MR_OK;
    });
}

mr_status mr_problem_to_json(const mr_problem* problem, char** out)
{
    if (!problem || !out)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = dup_string(mr::problem_to_json(problem->value).dump());
        return *out ? MR_OK : fail(MR_ERR_INTERNAL, "allocation failed");
    });
}

void mr_problem_free(mr_problem* problem) { delete problem; }

mr_status mr_scheme_build(const mr_problem* problem, const char* algorithm,
                          const char* params_json, mr_scheme** out)
{
    if (!problem || !algorithm || !out)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        auto alg = mr::algorithm_from_name(algorithm);
        if (!alg)
            throw mr::Error(mr::ErrorCode::invalid_argument,
                            std::string("unknown algorithm '") + algorithm +
                                "'");
        nlohmann::json params = params_json
                                    ? parse_json(params_json, "params")
                                    : nlohmann::json::object();
        mr::AlgoParams ap = mr::algo_params_from_json(params, "params");
        *out = new mr_scheme{std::make_shared<mr::ResolventScheme>(
            mr::build_algorithm(*alg, problem->value, ap))};
        return MR_OK;
    });
}

mr_status mr_scheme_dim(const mr_scheme* scheme, int* out)
{
    if (!scheme || !out)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    *out = static_cast<int>(scheme->value->dim());
    return MR_OK;
}

mr_status mr_scheme_apply(const mr_scheme* scheme, const double* b,
                          double* b_next, double* b_tilde)
{
    if (!scheme || !b || !b_next)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        Eigen::Index n = scheme->value->dim();
        Eigen::Map<const Eigen::VectorXd> bin(b, n);
        auto [next, tilde] = scheme->value->apply_generalized(bin);
        Eigen::Map<Eigen::VectorXd>(b_next, n) = next;
        if (b_tilde) Eigen::Map<Eigen::VectorXd>(b_tilde, n) = tilde;
        return MR_OK;
    });
}

mr_status mr_scheme_run(const mr_scheme* scheme, const double* b0,
                        int max_iter, double eps, mr_trace** out)
{
    if (!scheme || !b0 || !out)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        Eigen::Index n = scheme->value->dim();
        mr::RunOptions opts;
        opts.max_iter = max_iter;
        opts.eps = eps;
        mr::IterationTrace trace = mr::run_iteration(
            *scheme->value, Eigen::Map<const Eigen::VectorXd>(b0, n), opts);
        *out = new mr_trace{std::move(trace), scheme->value};
        return MR_OK;
    });
}

mr_status mr_scheme_reference(const mr_scheme* scheme, const double* b0_hint,
                              int long_iters, double* out)
{
    if (!scheme || !b0_hint || !out)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        Eigen::Index n = scheme->value->dim();
        Eigen::VectorXd ref = mr::compute_reference(
            *scheme->value, Eigen::Map<const Eigen::VectorXd>(b0_hint, n),
            long_iters);
        Eigen::Map<Eigen::VectorXd>(out, n) = ref;
        return MR_OK;
    });
}

void mr_scheme_free(mr_scheme* scheme) { delete scheme; }

mr_status mr_trace_steps(const mr_trace* trace, int* out)
{
    if (!trace || !out)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    *out = trace->value.steps;
    return MR_OK;
}

mr_status mr_trace_stop_reason(const mr_trace* trace, const char** out)
{
    if (!trace || !out)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    *out = mr::to_string(trace->value.stop_reason);
    return MR_OK;
}

mr_status mr_trace_channel(const mr_trace* trace, const char* channel,
                           double* buf, int buflen, int* written)
{
    if (!trace || !channel || !written || (buflen > 0 && !buf))
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    const std::vector<double>* src = nullptr;
    std::string name(channel);
    if (name == "res_S") src = &trace->value.residual_S;
    else if (name == "res_Q") src = &trace->value.residual_Q;
    else if (name == "objective") src = &trace->value.objective;
    else if (name == "ergodic_objective")
        src = &trace->value.ergodic_objective;
    else if (name == "dist_ref") src = &trace->value.dist_ref;
    else
        return fail(MR_ERR_INVALID_ARGUMENT,
                    "unknown channel '" + name + "'");
    *written = static_cast<int>(src->size());
    int n = std::min<int>(buflen, static_cast<int>(src->size()));
    for (int i = 0; i < n; ++i) buf[i] = (*src)[static_cast<std::size_t>(i)];
    return MR_OK;
}

mr_status mr_trace_write_csv(const mr_trace* trace, const char* csv_path,
                             const char* sidecar_path)
{
    if (!trace || !csv_path)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        mr::write_trace_csv(trace->value, csv_path);
        if (sidecar_path)
            mr::write_trace_sidecar(trace->value, *trace->scheme,
                                    sidecar_path);
        return MR_OK;
    });
}

void mr_trace_free(mr_trace* trace) { delete trace; }

mr_status mr_run_experiment(const char* config_path, int negative_control,
                            int* exit_code)
{
    if (!config_path || !exit_code)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        mr::ExperimentOutcome outcome =
            mr::run_experiment_file(config_path, negative_control != 0);
        *exit_code = outcome.exit_code;
        if (outcome.exit_code == 1) g_last_error = outcome.message;
        return MR_OK;
    });
}

mr_status mr_run_experiment_json(const char* config_json, int negative_control,
                                 int* exit_code, char** report_json)
{
    if (!config_json || !exit_code)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        nlohmann::json config = parse_json(config_json, "config");
        mr::ExperimentOutcome outcome =
            mr::run_experiment_json(config, negative_control != 0);
        *exit_code = outcome.exit_code;
        if (outcome.exit_code == 1) g_last_error = outcome.message;
        if (report_json)
            *report_json = dup_string(outcome.report.dump());
        return MR_OK;
    });
}

mr_status mr_run_experiment_batch(const char* const* config_paths, int count,
                                  int jobs, int negative_control,
                                  int* exit_code)
{
    if (!config_paths || count < 1 || !exit_code)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        std::vector<std::string> paths;
        for (int i = 0; i < count; ++i) {
            if (!config_paths[i])
                throw mr::Error(mr::ErrorCode::invalid_argument,
                                "null config path");
            paths.emplace_back(config_paths[i]);
        }
        *exit_code =
            mr::run_experiment_batch(paths, jobs, negative_control != 0);
        return MR_OK;
    });
}

mr_status mr_validate_config(const char* config_path, int* exit_code)
{
    if (!config_path || !exit_code)
        return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        std::string message;
        *exit_code = mr::validate_config_file(config_path, &message);
        if (*exit_code != 0) g_last_error = message;
        return MR_OK;
    });
}

mr_status mr_catalog(char** out)
{
    if (!out) return fail(MR_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = dup_string(mr::catalog_text());
        return *out ? MR_OK : fail(MR_ERR_INTERNAL, "allocation failed");
    });
}

void mr_string_free(char* text) { std::free(text); }

} // extern "C"
