#include "rates.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace mr {

namespace {

const double kGoldenLog = std::log(0.5 * (1.0 + std::sqrt(5.0)));

double get(const std::map<std::string, double>& c, const std::string& key)
{
    auto it = c.find(key);
    if (it == c.end())
        throw Error(ErrorCode::invalid_argument,
                    "rate bound: missing constant '" + key + "'");
    return it->second;
}

enum class Channel { res_q, res_s, obj_gap, obj_gap_ergodic, dist_q };

Channel channel_of(RateFormula f)
{
    switch (f) {
    case RateFormula::picard_sequential:
    case RateFormula::km_sequential:
    case RateFormula::km_mu_sequential:
    case RateFormula::r_linear_residual:
    case RateFormula::km_r_linear:
        return Channel::res_q;
    case RateFormula::generalized_sequential:
        return Channel::res_s;
    case RateFormula::objective_ergodic:
        return Channel::obj_gap_ergodic;
    case RateFormula::objective_nonergodic:
    case RateFormula::strong_objective:
    case RateFormula::strong_objective_rlinear:
        return Channel::obj_gap;
    case RateFormula::q_linear_distance:
    case RateFormula::km_q_linear:
        return Channel::dist_q;
    }
    throw Error(ErrorCode::internal, "rate bound: unhandled formula");
}

} // namespace

const char* to_string(RateFormula f)
{
    switch (f) {
    case RateFormula::picard_sequential: return "picard_sequential";
    case RateFormula::km_sequential: return "km_sequential";
    case RateFormula::generalized_sequential: return "generalized_sequential";
    case RateFormula::objective_ergodic: return "objective_ergodic";
    case RateFormula::objective_nonergodic: return "objective_nonergodic";
    case RateFormula::q_linear_distance: return "q_linear_distance";
    case RateFormula::r_linear_residual: return "r_linear_residual";
    case RateFormula::strong_objective: return "strong_objective";
    case RateFormula::strong_objective_rlinear:
        return "strong_objective_rlinear";
    case RateFormula::km_mu_sequential: return "km_mu_sequential";
    case RateFormula::km_q_linear: return "km_q_linear";
    case RateFormula::km_r_linear: return "km_r_linear";
    }
    return "unknown";
}

std::vector<RateFormula> all_rate_formulas()
{
    return {RateFormula::picard_sequential,
            RateFormula::km_sequential,
            RateFormula::generalized_sequential,
            RateFormula::objective_ergodic,
            RateFormula::objective_nonergodic,
            RateFormula::q_linear_distance,
            RateFormula::r_linear_residual,
            RateFormula::strong_objective,
            RateFormula::strong_objective_rlinear,
            RateFormula::km_mu_sequential,
            RateFormula::km_q_linear,
            RateFormula::km_r_linear};
}

std::optional<RateFormula> rate_formula_from_name(const std::string& name)
{
    for (RateFormula f : all_rate_formulas())
        if (name == to_string(f)) return f;
    return std::nullopt;
}

bool RateBound::valid_at(int k) const
{
    const auto& c = constants;
    auto has_pos = [&](const char* key) {
        auto it = c.find(key);
        return it != c.end() && it->second > 0.0;
    };
    switch (formula) {
    case RateFormula::picard_sequential:
        return k >= 0;
    case RateFormula::km_sequential: {
        double g = get(c, "gamma");
        return k >= 0 && g > 0.0 && g < 2.0;
    }
    case RateFormula::generalized_sequential:
        return k >= 0 && has_pos("lambda_min_MGM") && has_pos("lambda_max_S");
    case RateFormula::objective_ergodic:
    case RateFormula::objective_nonergodic:
        return k >= 1;
    case RateFormula::q_linear_distance:
        return k >= 0 && get(c, "norm_Q") > 0.0 && get(c, "mu") >= 0.0;
    case RateFormula::r_linear_residual: {
        // the envelope starts at k = 1: the first step is governed by firm
        // nonexpansiveness and can exceed the k = 0 value of this formula
        // once mu is large against the metric norm
        double mu = get(c, "mu"), qn = get(c, "norm_Q");
        if (!(mu > 0.0) || !(qn > 0.0) || k < 1) return false;
        if (mu >= 0.25 * (std::sqrt(5.0) - 1.0) * qn) return true;
        double threshold =
            kGoldenLog / std::log(std::sqrt(1.0 + 2.0 * mu / qn)) - 1.0;
        return static_cast<double>(k) >= threshold;
    }
    case RateFormula::strong_objective:
        return k >= 1 && get(c, "mu") > 0.0 && get(c, "norm_Q") > 0.0;
    case RateFormula::strong_objective_rlinear: {
        double mu = get(c, "mu"), qn = get(c, "norm_Q");
        if (!(mu > 0.0) || !(qn > 0.0) || k < 1) return false;
        if (mu >= 0.5 * (std::sqrt(5.0) + 1.0) * qn) return true;
        double threshold = kGoldenLog / std::log(std::sqrt(1.0 + mu / qn));
        return static_cast<double>(k) >= threshold;
    }
    case RateFormula::km_mu_sequential:
    case RateFormula::km_q_linear: {
        double mu = get(c, "mu"), qn = get(c, "norm_Q"), g = get(c, "gamma");
        return k >= 0 && mu > 0.0 && qn > 0.0 && g > 0.0 &&
               g < 1.0 + qn / (2.0 * mu + qn);
    }
    case RateFormula::km_r_linear: {
        double mu = get(c, "mu"), qn = get(c, "norm_Q"), g = get(c, "gamma");
        if (!(mu > 0.0) || !(qn > 0.0) || !(g > 0.0) || k < 1) return false;
        if (g > 0.95) return false; // prefactor degenerates toward gamma = 1
        double corner = 0.25 * (3.0 - std::sqrt(5.0)) * (2.0 + qn / mu);
        if (qn < (std::sqrt(5.0) + 1.0) * mu && g > corner && g < 1.0)
            return true;
        if (g < std::min(corner, 1.0)) {
            double threshold =
                kGoldenLog /
                    std::log(std::sqrt((2.0 * mu + qn) /
                                       (2.0 * (1.0 - g) * mu + qn))) -
                1.0;
            return static_cast<double>(k) >= threshold;
        }
        return false;
    }
    }
    return false;
}

std::string RateBound::validity_description() const
{
    switch (formula) {
    case RateFormula::picard_sequential: return "k >= 0";
    case RateFormula::km_sequential: return "k >= 0, gamma in (0, 2)";
    case RateFormula::generalized_sequential:
        return "k >= 0, S and M^-T G M^-1 symmetric PD";
    case RateFormula::objective_ergodic:
    case RateFormula::objective_nonergodic:
        return "k >= 1";
    case RateFormula::q_linear_distance: return "k >= 0, mu >= 0";
    case RateFormula::r_linear_residual:
        return "mu > 0; k >= 1 when mu >= (sqrt(5)-1)/4 norm_Q, otherwise "
               "k beyond the logarithmic threshold";
    case RateFormula::strong_objective: return "k >= 1, mu > 0";
    case RateFormula::strong_objective_rlinear:
        return "mu > 0; k >= 1 when mu >= (sqrt(5)+1)/2 norm_Q, otherwise "
               "k beyond the logarithmic threshold";
    case RateFormula::km_mu_sequential:
    case RateFormula::km_q_linear:
        return "k >= 0, mu > 0, gamma in (0, 1 + norm_Q/(2mu + norm_Q))";
    case RateFormula::km_r_linear:
        return "mu > 0, gamma <= 0.95; global for gamma above the corner "
               "value with norm_Q < (sqrt(5)+1) mu, otherwise k beyond the "
               "logarithmic threshold";
    }
    return "unknown";
}

double RateBound::at(int k) const
{
    if (!valid_at(k)) {
        std::ostringstream msg;
        msg << "bound " << to_string(formula) << " not applicable at k = " << k
            << " (requires " << validity_description() << ")";
        throw Error(ErrorCode::invalid_argument, msg.str());
    }
    const auto& c = constants;
    switch (formula) {
    case RateFormula::picard_sequential:
        return get(c, "dist0_Q") / std::sqrt(static_cast<double>(k + 1));
    case RateFormula::km_sequential: {
        double g = get(c, "gamma");
        return get(c, "dist0_Q") * std::sqrt(g / (2.0 - g)) /
               std::sqrt(static_cast<double>(k + 1));
    }
    case RateFormula::generalized_sequential:
        return get(c, "dist0_S") *
               std::sqrt(get(c, "lambda_max_S") / get(c, "lambda_min_MGM")) /
               std::sqrt(static_cast<double>(k + 1));
    case RateFormula::objective_ergodic:
    case RateFormula::objective_nonergodic: {
        double d = get(c, "dist0_Q");
        return d * d / (2.0 * static_cast<double>(k));
    }
    case RateFormula::q_linear_distance: {
        double qn = get(c, "norm_Q"), mu = get(c, "mu");
        double rate = std::sqrt(qn / (qn + 2.0 * mu));
        return std::pow(rate, k) * get(c, "dist0_Q");
    }
    case RateFormula::r_linear_residual: {
        double qn = get(c, "norm_Q"), mu = get(c, "mu");
        double pre = std::sqrt(2.0 * mu / (2.0 * mu + qn));
        return pre *
               std::pow(1.0 + 2.0 * mu / qn, -0.25 * (k + 1)) *
               get(c, "dist0_Q");
    }
    case RateFormula::strong_objective: {
        double qn = get(c, "norm_Q"), mu = get(c, "mu");
        double d = get(c, "dist0_Q");
        return mu / (2.0 * qn) / (std::pow(1.0 + mu / qn, k) - 1.0) * d * d;
    }
    case RateFormula::strong_objective_rlinear: {
        double qn = get(c, "norm_Q"), mu = get(c, "mu");
        double d = get(c, "dist0_Q");
        return mu / (2.0 * qn) * std::pow(1.0 + mu / qn, -0.5 * k) * d * d;
    }
    case RateFormula::km_mu_sequential: {
        double qn = get(c, "norm_Q"), mu = get(c, "mu"), g = get(c, "gamma");
        double factor = std::sqrt(g * (2.0 * mu + qn) /
                                  (2.0 * mu * (1.0 - g) + (2.0 - g) * qn));
        return factor * get(c, "dist0_Q") /
               std::sqrt(static_cast<double>(k + 1));
    }
    case RateFormula::km_q_linear: {
        double qn = get(c, "norm_Q"), mu = get(c, "mu"), g = get(c, "gamma");
        double nu = 1.0 - 2.0 * g * mu / (2.0 * mu + qn);
        return std::pow(nu, 0.5 * k) * get(c, "dist0_Q");
    }
    case RateFormula::km_r_linear: {
        double qn = get(c, "norm_Q"), mu = get(c, "mu"), g = get(c, "gamma");
        double nu = 1.0 - 2.0 * g * mu / (2.0 * mu + qn);
        return g / (1.0 - g) * std::sqrt(1.0 + qn / (2.0 * mu)) *
               std::pow(nu, 0.25 * (k + 1)) * get(c, "dist0_Q");
    }
    }
    throw Error(ErrorCode::internal, "rate bound: unhandled formula");
}

RateBound make_rate_bound(RateFormula formula, const ResolventScheme& scheme,
                          const Eigen::VectorXd& b0,
                          const Eigen::VectorXd& reference,
                          std::optional<double> h_star)
{
    if (b0.size() != scheme.dim() || reference.size() != scheme.dim())
        throw Error(ErrorCode::dimension_mismatch,
                    "make_rate_bound: point dimensions do not match scheme");
    RateBound bound;
    bound.formula = formula;
    auto& c = bound.constants;
    c["norm_Q"] = scheme.metric().op_norm();
    c["mu"] = scheme.op().mu();
    if (scheme.scalar_correction()) c["gamma"] = scheme.gamma();
    c["dist0_Q"] = q_norm(b0 - reference, scheme.metric());
    c["dist0_S"] = q_norm(b0 - reference, scheme.s_metric());
    c["lambda_max_S"] = scheme.lambda_max_S();
    c["lambda_min_MGM"] = scheme.lambda_min_MGM();
    if (h_star) c["h_star"] = *h_star;
    return bound;
}

RateReport check_trace(const RateBound& bound, const IterationTrace& trace,
                       const ResolventScheme& scheme, double rtol, double atol)
{
    RateReport report;
    report.formula = bound.formula;
    report.constants = bound.constants;

    Channel ch = channel_of(bound.formula);
    if (trace.iterates_capped ||
        static_cast<int>(trace.iterates.size()) != trace.steps + 1)
        throw Error(ErrorCode::invalid_argument,
                    "check_trace: full iterate history required to recompute "
                    "the empirical channel");

    bool needs_q = ch == Channel::res_q || ch == Channel::dist_q ||
                   ch == Channel::obj_gap || ch == Channel::obj_gap_ergodic;
    if (needs_q && !scheme.metric().is_symmetric_psd())
        throw Error(ErrorCode::unsupported,
                    "check_trace: Q-based formula needs a symmetric PSD "
                    "metric");
    if (ch == Channel::res_s && !scheme.s_metric().is_symmetric())
        throw Error(ErrorCode::unsupported,
                    "check_trace: S-based formula needs a symmetric S");

    bool obj = ch == Channel::obj_gap || ch == Channel::obj_gap_ergodic;
    double h_star = 0.0;
    if (obj) {
        if (!scheme.op().has_objective())
            throw Error(ErrorCode::invalid_argument,
                        "check_trace: missing trace channel (operator has no "
                        "potential)");
        auto it = bound.constants.find("h_star");
        if (it == bound.constants.end())
            throw Error(ErrorCode::invalid_argument,
                        "check_trace: missing constant h_star");
        h_star = it->second;
    }
    if (ch == Channel::dist_q && !trace.reference)
        throw Error(ErrorCode::invalid_argument,
                    "check_trace: missing trace channel (no reference)");

    double worst = std::numeric_limits<double>::infinity();
    auto consider = [&](int k, double emp) {
        if (!bound.valid_at(k)) return;
        double bk = bound.at(k);
        double slack = bk - emp;
        worst = std::min(worst, slack);
        ++report.checked;
        if (slack < -(rtol * bk + atol))
            report.violations.push_back({k, bk, emp});
    };

    switch (ch) {
    case Channel::res_q:
        for (int k = 0; k < trace.steps; ++k)
            consider(k, q_norm(trace.iterates[k + 1] - trace.iterates[k],
                               scheme.metric()));
        break;
    case Channel::res_s:
        for (int k = 0; k < trace.steps; ++k)
            consider(k, q_norm(trace.iterates[k + 1] - trace.iterates[k],
                               scheme.s_metric()));
        break;
    case Channel::dist_q:
        for (int k = 0; k <= trace.steps; ++k)
            consider(k, q_norm(trace.iterates[k] - *trace.reference,
                               scheme.metric()));
        break;
    case Channel::obj_gap:
        for (int k = 1; k <= trace.steps; ++k)
            consider(k,
                     *scheme.op().objective_value(trace.iterates[k]) - h_star);
        break;
    case Channel::obj_gap_ergodic: {
        PairwiseAccumulator acc;
        for (int k = 1; k <= trace.steps; ++k) {
            acc.add(trace.iterates[k]);
            Eigen::VectorXd avg = acc.sum() / static_cast<double>(k);
            consider(k, *scheme.op().objective_value(avg) - h_star);
        }
        break;
    }
    }

    report.worst_slack = report.checked > 0 ? worst : 0.0;
    report.pass = report.violations.empty();
    return report;
}

std::string rate_report_json(const RateReport& report)
{
    nlohmann::json j;
    j["formula"] = to_string(report.formula);
    j["constants"] = report.constants;
    j["worst_slack"] = report.worst_slack;
    j["checked"] = report.checked;
    j["pass"] = report.pass;
    nlohmann::json v = nlohmann::json::array();
    for (const RateViolation& rv : report.violations)
        v.push_back({{"k", rv.k}, {"bound", rv.bound},
                     {"empirical", rv.empirical}});
    j["violations"] = v;
    return j.dump();
}

} // namespace mr
