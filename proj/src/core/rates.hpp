/*=============================================================================
 * Evaluatable convergence-rate bounds and the comparator that checks an
 * iteration trace against them.
 *
 * Twelve closed-form bounds are implemented; each knows its validity
 * region (parameter ranges plus, for the locally valid r-linear bounds,
 * an iteration threshold) and refuses to produce a number outside it.
 * The comparator recomputes every empirical quantity from the stored
 * iterates rather than trusting the trace producer.
 *============================================================================*/
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iterate.hpp"

namespace mr {

enum class RateFormula {
    picard_sequential,       // ||b^{k+1}-b^k||_Q <= dist0_Q / sqrt(k+1)
    km_sequential,           // * sqrt(gamma/(2-gamma))
    generalized_sequential,  // S-residual with sqrt(lmax(S)/lmin(M^-T G M^-1))
    objective_ergodic,       // h(mean) - h* <= dist0_Q^2 / (2k)
    objective_nonergodic,    // h(b^k) - h* <= dist0_Q^2 / (2k)
    q_linear_distance,       // ||b^k-b*||_Q <= (normQ/(normQ+2mu))^{k/2} dist0_Q
    r_linear_residual,       // sqrt(2mu/(2mu+normQ)) (1+2mu/normQ)^{-(k+1)/4} dist0_Q
    strong_objective,        // mu/(2normQ) / ((1+mu/normQ)^k - 1) dist0_Q^2
    strong_objective_rlinear,// mu/(2normQ) (1+mu/normQ)^{-k/2} dist0_Q^2
    km_mu_sequential,        // relaxed sequential bound under strong monotonicity
    km_q_linear,             // (1 - 2 gamma mu/(2mu+normQ))^{k/2} dist0_Q
    km_r_linear,             // gamma/(1-gamma) sqrt(1+normQ/(2mu)) nu^{(k+1)/4} dist0_Q
};

inline constexpr int kRateFormulaCount = 12;

const char* to_string(RateFormula f);
std::optional<RateFormula> rate_formula_from_name(const std::string& name);
std::vector<RateFormula> all_rate_formulas();

struct RateBound {
    RateFormula formula;
    std::map<std::string, double> constants;

    double at(int k) const;          // throws outside validity
    bool valid_at(int k) const;
    std::string validity_description() const;
};

/* Assemble the constants a formula needs from the scheme and run data.
 * h_star is required by the objective formulas, the reference by the
 * distance formulas. */
RateBound make_rate_bound(RateFormula formula, const ResolventScheme& scheme,
                          const Eigen::VectorXd& b0,
                          const Eigen::VectorXd& reference,
                          std::optional<double> h_star = std::nullopt);

inline double bound_at(const RateBound& bound, int k) { return bound.at(k); }

struct RateViolation {
    int k;
    double bound;
    double empirical;
};

struct RateReport {
    RateFormula formula;
    std::map<std::string, double> constants;
    double worst_slack = 0.0; // min over checked k of bound - empirical
    int checked = 0;
    std::vector<RateViolation> violations;
    bool pass = true;
};

/* Slack bound(k) - empirical(k) per iterate within the validity region;
 * a violation is slack < -(rtol * bound + atol). Empirical values are
 * recomputed from trace.iterates. */
RateReport check_trace(const RateBound& bound, const IterationTrace& trace,
                       const ResolventScheme& scheme, double rtol = 1e-6,
                       double atol = 1e-10);

std::string rate_report_json(const RateReport& report);

} // namespace mr
