#include "iterate.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace mr {

const char* to_string(StopReason r)
{
    switch (r) {
    case StopReason::max_iter: return "max_iter";
    case StopReason::residual_below: return "residual_below";
    case StopReason::divergence_guard: return "divergence_guard";
    case StopReason::solver_error: return "solver_error";
    }
    return "unknown";
}

void PairwiseAccumulator::add(const Eigen::VectorXd& v)
{
    Eigen::VectorXd carry = v;
    std::size_t level = 0;
    while (level < levels_.size() && levels_[level].has_value()) {
        carry += *levels_[level];
        levels_[level].reset();
        ++level;
    }
    if (level == levels_.size()) levels_.emplace_back();
    levels_[level] = std::move(carry);
    ++count_;
}

Eigen::VectorXd PairwiseAccumulator::sum() const
{
    Eigen::VectorXd total;
    for (const auto& part : levels_) {
        if (!part) continue;
        if (total.size() == 0)
            total = *part;
        else
            total += *part;
    }
    return total;
}

IterationTrace run_iteration(const ResolventScheme& scheme,
                             const Eigen::VectorXd& b0,
                             const RunOptions& options)
{
    if (b0.size() != scheme.dim())
        throw Error(ErrorCode::dimension_mismatch,
                    "run: starting point does not match scheme dimension");
    if (options.max_iter < 1)
        throw Error(ErrorCode::invalid_argument, "run: max_iter must be >= 1");
    if (!(options.eps > 0.0))
        throw Error(ErrorCode::invalid_argument, "run: eps must be positive");
    if (options.reference && options.reference->size() != scheme.dim())
        throw Error(ErrorCode::dimension_mismatch,
                    "run: reference does not match scheme dimension");

    const MonotoneBlockOperator& op = scheme.op();
    const Metric& q = scheme.metric();
    const Metric& s = scheme.s_metric();
    bool track_q = q.is_symmetric_psd();
    bool track_obj = op.has_objective();
    bool track_dist = options.reference.has_value();
    bool monotone_res_q = track_q && scheme.scalar_correction();

    std::size_t keep =
        std::min<std::size_t>(10'000, options.iterate_cap_scalars /
                                          std::max<Eigen::Index>(1, b0.size()));

    IterationTrace trace;
    trace.reference = options.reference;
    auto dist_to_ref = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd d = b - *options.reference;
        return track_q ? q_norm(d, q) : q_norm(d, s);
    };

    trace.iterates.push_back(b0);
    trace.final_iterate = b0;
    if (track_obj) trace.objective.push_back(*op.objective_value(b0));
    if (track_dist) trace.dist_ref.push_back(dist_to_ref(b0));

    PairwiseAccumulator ergodic;
    Eigen::VectorXd b = b0;
    double guard = 1e12 * (1.0 + b0.norm());

    for (int k = 0; k < options.max_iter; ++k) {
        Eigen::VectorXd b_next, b_tilde;
        try {
            std::tie(b_next, b_tilde) = scheme.apply_generalized(b);
        } catch (const Error& e) {
            trace.stop_reason = StopReason::solver_error;
            trace.error_message = e.what();
            return trace;
        }

        if (!b_next.allFinite()) {
            trace.stop_reason = StopReason::divergence_guard;
            return trace;
        }

        Eigen::VectorXd d = b_next - b;
        double res_s = q_norm(d, s);
        trace.residual_S.push_back(res_s);
        if (track_q) {
            double res_q = q_norm(d, q);
            if (monotone_res_q && !trace.residual_Q.empty() &&
                res_q > trace.residual_Q.back() +
                            1e-10 * (1.0 + trace.residual_Q.back()))
                ++trace.residual_q_defects;
            trace.residual_Q.push_back(res_q);
        }
        if (trace.iterates.size() <= keep) {
            trace.iterates.push_back(b_next);
            trace.tildes.push_back(b_tilde);
        } else {
            trace.iterates_capped = true;
        }
        if (track_obj) {
            trace.objective.push_back(*op.objective_value(b_next));
            ergodic.add(b_next);
            Eigen::VectorXd avg =
                ergodic.sum() / static_cast<double>(ergodic.count());
            trace.ergodic_objective.push_back(*op.objective_value(avg));
        }
        if (track_dist) trace.dist_ref.push_back(dist_to_ref(b_next));

        ++trace.steps;
        b = std::move(b_next);
        trace.final_iterate = b;

        if (res_s <= options.eps) {
            trace.stop_reason = StopReason::residual_below;
            return trace;
        }
        if (b.norm() > guard) {
            trace.stop_reason = StopReason::divergence_guard;
            return trace;
        }
    }
    trace.stop_reason = StopReason::max_iter;
    return trace;
}

Eigen::VectorXd compute_reference(const ResolventScheme& scheme,
                                  const Eigen::VectorXd& b0_hint,
                                  int long_iters)
{
    const MonotoneBlockOperator& op = scheme.op();

    if (op.is_affine()) {
        Eigen::MatrixXd sys = op.affine_hessian() + op.linear_part();
        Eigen::VectorXd rhs = op.shift() - op.affine_linear();
        if (sys.cwiseAbs().maxCoeff() == 0.0 && rhs.cwiseAbs().maxCoeff() == 0.0)
            return b0_hint; // A = 0: every point is a zero
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
        if (lu.isInvertible()) {
            Eigen::VectorXd x = lu.solve(rhs);
            double res = (sys * x - rhs).norm();
            if (res <= 1e-10 * (1.0 + x.norm())) return x;
        }
        // singular affine part: fall through to the iterative path
    }

    RunOptions opts;
    opts.max_iter = long_iters;
    opts.eps = 1e-13;
    opts.iterate_cap_scalars = 0; // residuals only
    IterationTrace trace = run_iteration(scheme, b0_hint, opts);
    if (trace.stop_reason == StopReason::divergence_guard ||
        trace.stop_reason == StopReason::solver_error)
        throw Error(ErrorCode::not_converged,
                    "compute_reference: long run failed (" +
                        std::string(to_string(trace.stop_reason)) + ") " +
                        trace.error_message);

    // polish with plain resolvent steps until the selection certifies
    Eigen::VectorXd b = trace.final_iterate;
    for (int polish = 0; polish < 8; ++polish) {
        ApplyResult res = scheme.apply_T_certified(b);
        double cap = 1e-10 * (1.0 + res.b_tilde.norm());
        if (res.selection.norm() <= cap) return res.b_tilde;
        b = res.b_tilde;
    }
    throw Error(ErrorCode::not_converged,
                "compute_reference: could not certify an inclusion residual "
                "below 1e-10; supply a reference externally");
}

namespace {

void require_full_history(const IterationTrace& trace, const char* op)
{
    if (trace.iterates_capped ||
        static_cast<int>(trace.iterates.size()) != trace.steps + 1)
        throw Error(ErrorCode::invalid_argument,
                    std::string(op) + ": full iterate history required");
}

TraceCheckReport finish(TraceCheckReport rep)
{
    rep.pass = rep.violation_ks.empty();
    return rep;
}

} // namespace

TraceCheckReport check_fejer_S(const IterationTrace& trace,
                               const ResolventScheme& scheme,
                               const Eigen::VectorXd& reference, double tol)
{
    require_full_history(trace, "check_fejer_S");
    if (reference.size() != scheme.dim())
        throw Error(ErrorCode::dimension_mismatch,
                    "check_fejer_S: reference dimension mismatch");
    const Metric& s = scheme.s_metric();
    const Eigen::MatrixXd& mgm = scheme.mgm_matrix();
    TraceCheckReport rep;
    rep.name = "fejer_S";
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < trace.steps; ++k) {
        double lhs = q_norm_sq(trace.iterates[k + 1] - reference, s);
        double rhs =
            q_norm_sq(trace.iterates[k] - reference, s) -
            weighted_norm_sq(trace.iterates[k] - trace.iterates[k + 1], mgm);
        double slack = rhs - lhs;
        worst = std::min(worst, slack);
        ++rep.checked;
        if (slack < -tol) rep.violation_ks.push_back(k);
    }
    rep.worst_slack = rep.checked ? worst : 0.0;
    return finish(rep);
}

TraceCheckReport check_residual_decrease_S(const IterationTrace& trace,
                                           const ResolventScheme& scheme,
                                           double tol)
{
    require_full_history(trace, "check_residual_decrease_S");
    if (static_cast<int>(trace.tildes.size()) < trace.steps)
        throw Error(ErrorCode::invalid_argument,
                    "check_residual_decrease_S: proximal points missing");
    const Metric& s = scheme.s_metric();
    const Metric& g = scheme.g_metric();
    TraceCheckReport rep;
    rep.name = "residual_decrease_S";
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 2 <= trace.steps; ++k) {
        double lhs =
            q_norm_sq(trace.iterates[k] - trace.iterates[k + 1], s) -
            q_norm_sq(trace.iterates[k + 1] - trace.iterates[k + 2], s);
        Eigen::VectorXd r_k = trace.iterates[k] - trace.tildes[k];
        Eigen::VectorXd r_k1 = trace.iterates[k + 1] - trace.tildes[k + 1];
        double rhs = q_norm_sq(r_k - r_k1, g);
        double slack = lhs - rhs;
        worst = std::min(worst, slack);
        ++rep.checked;
        if (slack < -tol) rep.violation_ks.push_back(k);
    }
    rep.worst_slack = rep.checked ? worst : 0.0;
    return finish(rep);
}

TraceCheckReport check_seq_decrease_bracket(const IterationTrace& trace,
                                            const ResolventScheme& scheme,
                                            double tol)
{
    require_full_history(trace, "check_seq_decrease_bracket");
    if (!scheme.scalar_correction() || std::abs(scheme.gamma() - 1.0) > 1e-14)
        throw Error(ErrorCode::unsupported,
                    "check_seq_decrease_bracket: needs the plain iteration "
                    "(M = I)");
    if (!scheme.op().has_objective())
        throw Error(ErrorCode::invalid_argument,
                    "check_seq_decrease_bracket: operator has no potential");
    if (!scheme.metric().is_symmetric_psd())
        throw Error(ErrorCode::unsupported,
                    "check_seq_decrease_bracket: needs a symmetric PSD "
                    "metric");
    const Metric& q = scheme.metric();
    TraceCheckReport rep;
    rep.name = "seq_decrease_bracket";
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 1; k < trace.steps; ++k) {
        double step_prev =
            q_norm_sq(trace.iterates[k] - trace.iterates[k - 1], q);
        double step_next =
            q_norm_sq(trace.iterates[k + 1] - trace.iterates[k], q);
        double drop = *scheme.op().objective_value(trace.iterates[k]) -
                      *scheme.op().objective_value(trace.iterates[k + 1]);
        double lower_slack = drop - step_next;
        double upper_slack = 1.5 * step_prev - 0.5 * step_next - drop;
        double slack = std::min(lower_slack, upper_slack);
        worst = std::min(worst, slack);
        ++rep.checked;
        if (slack < -tol) rep.violation_ks.push_back(k);
    }
    rep.worst_slack = rep.checked ? worst : 0.0;
    return finish(rep);
}

TraceCheckReport check_residual_q_monotone(const IterationTrace& trace,
                                           double tol)
{
    TraceCheckReport rep;
    rep.name = "residual_q_monotone";
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < trace.residual_Q.size(); ++k) {
        double slack = trace.residual_Q[k - 1] - trace.residual_Q[k];
        worst = std::min(worst, slack);
        ++rep.checked;
        if (slack < -tol * (1.0 + trace.residual_Q[k - 1]))
            rep.violation_ks.push_back(static_cast<int>(k));
    }
    rep.worst_slack = rep.checked ? worst : 0.0;
    return finish(rep);
}

namespace {

std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc())
        throw Error(ErrorCode::internal, "trace csv: formatting failed");
    return std::string(buf, ptr);
}

} // namespace

std::string trace_csv_string(const IterationTrace& trace)
{
    std::ostringstream out;
    out << "k,res_S,res_Q,objective,ergodic_objective,dist_ref\n";
    int rows = trace.steps + 1;
    for (int k = 0; k < rows; ++k) {
        out << k << ',';
        if (k < static_cast<int>(trace.residual_S.size()))
            out << format_double(trace.residual_S[k]);
        out << ',';
        if (k < static_cast<int>(trace.residual_Q.size()))
            out << format_double(trace.residual_Q[k]);
        out << ',';
        if (k < static_cast<int>(trace.objective.size()))
            out << format_double(trace.objective[k]);
        out << ',';
        if (k >= 1 && k - 1 < static_cast<int>(trace.ergodic_objective.size()))
            out << format_double(trace.ergodic_objective[k - 1]);
        out << ',';
        if (k < static_cast<int>(trace.dist_ref.size()))
            out << format_double(trace.dist_ref[k]);
        out << '\n';
    }
    return out.str();
}

void write_trace_csv(const IterationTrace& trace, const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::io_error, "cannot open trace file: " + path);
    f << trace_csv_string(trace);
    if (!f)
        throw Error(ErrorCode::io_error, "failed writing trace file: " + path);
}

std::string trace_sidecar_json(const IterationTrace& trace,
                               const ResolventScheme& scheme)
{
    nlohmann::json j;
    j["dim"] = scheme.dim();
    j["blocks"] = scheme.op().block_count();
    j["steps"] = trace.steps;
    j["stop_reason"] = to_string(trace.stop_reason);
    if (!trace.error_message.empty()) j["error"] = trace.error_message;
    j["strategy"] = to_string(scheme.strategy());
    j["mu"] = scheme.op().mu();
    if (scheme.scalar_correction()) j["gamma"] = scheme.gamma();
    j["norm_Q"] = scheme.metric().op_norm();
    j["Q_symmetry"] = to_string(scheme.metric().symmetry());
    j["Q_definiteness"] = to_string(scheme.metric().definiteness());
    j["S_symmetry"] = to_string(scheme.s_metric().symmetry());
    j["S_definiteness"] = to_string(scheme.s_metric().definiteness());
    j["G_definiteness"] = to_string(scheme.g_metric().definiteness());
    j["lambda_min_S"] = scheme.lambda_min_S();
    j["lambda_max_S"] = scheme.lambda_max_S();
    j["lambda_min_MGM"] = scheme.lambda_min_MGM();
    j["lambda_max_MGM"] = scheme.lambda_max_MGM();
    j["residual_q_defects"] = trace.residual_q_defects;
    j["iterates_capped"] = trace.iterates_capped;
    return j.dump(2);
}

void write_trace_sidecar(const IterationTrace& trace,
                         const ResolventScheme& scheme,
                         const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::io_error, "cannot open sidecar file: " + path);
    f << trace_sidecar_json(trace, scheme) << '\n';
    if (!f)
        throw Error(ErrorCode::io_error,
                    "failed writing sidecar file: " + path);
}

} // namespace mr
