/*=============================================================================
 * Fixed-point iteration engine. Runs b^{k+1} = b^k + M(T b^k - b^k) and
 * records everything the rate checkers consume: iterates, proximal points,
 * residuals in the S- and Q-seminorms, objective values (when the operator
 * admits a potential), ergodic objective values, and distances to a
 * reference solution.
 *
 * Ergodic averages are accumulated with exact incremental pairwise
 * summation so O(1/k) bounds can be checked over thousands of steps
 * without drift.
 *============================================================================*/
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "resolvent.hpp"

namespace mr {

enum class StopReason { max_iter, residual_below, divergence_guard,
                        solver_error };

const char* to_string(StopReason r);

/* Binary-counter pairwise summation: level i holds a partial over 2^i
 * addends, so every query folds at most log2(count) partials. */
class PairwiseAccumulator {
public:
    void add(const Eigen::VectorXd& v);
    Eigen::VectorXd sum() const;
    std::size_t count() const { return count_; }

private:
    std::vector<std::optional<Eigen::VectorXd>> levels_;
    std::size_t count_ = 0;
};

struct IterationTrace {
    std::vector<Eigen::VectorXd> iterates; // b^0 .. b^K while under the cap
    std::vector<Eigen::VectorXd> tildes;   // proximal points, same cap
    std::vector<double> residual_S;        // k -> ||b^{k+1} - b^k||_S
    std::vector<double> residual_Q;        // same, empty unless Q sym PSD
    std::vector<double> objective;         // k -> h(b^k), empty if no potential
    std::vector<double> ergodic_objective; // index i -> h(mean of b^1..b^{i+1})
    std::vector<double> dist_ref;          // k -> distance to reference
    std::optional<Eigen::VectorXd> reference;
    Eigen::VectorXd final_iterate;         // always present, cap or not
    StopReason stop_reason = StopReason::max_iter;
    std::string error_message;
    int steps = 0;
    bool iterates_capped = false;
    int residual_q_defects = 0; // non-monotone Q-residual steps (M = gamma I)
};

struct RunOptions {
    int max_iter = 1000;
    double eps = 1e-10;
    std::optional<Eigen::VectorXd> reference;
    // full iterates kept while steps <= 10^4 and steps*dim <= cap
    std::size_t iterate_cap_scalars = 10'000'000;
};

/* Iterate until the S-seminorm step drops below eps, max_iter is reached,
 * or the divergence guard ||b^k|| > 1e12 (1 + ||b^0||) (or a non-finite
 * iterate) trips. A resolvent failure mid-run returns the partial trace
 * with stop_reason solver_error and the message attached. */
IterationTrace run_iteration(const ResolventScheme& scheme,
                             const Eigen::VectorXd& b0,
                             const RunOptions& options);

/* A certified zero of the operator: direct solve when A is affine,
 * otherwise a long high-precision run polished by extra resolvent steps.
 * The returned point carries a selection g in A(b) with
 * ||g|| <= 1e-10 (1 + ||b||); failure to certify raises not_converged. */
Eigen::VectorXd compute_reference(const ResolventScheme& scheme,
                                  const Eigen::VectorXd& b0_hint,
                                  int long_iters = 20000);

struct TraceCheckReport {
    std::string name;
    double worst_slack = 0.0;
    int checked = 0;
    std::vector<int> violation_ks;
    bool pass = true;
};

/* ||b^{k+1}-b*||_S^2 <= ||b^k-b*||_S^2 - ||b^k-b^{k+1}||^2_{M^-T G M^-1}
 * per iterate (the contraction the corrected iteration lives on). */
TraceCheckReport check_fejer_S(const IterationTrace& trace,
                               const ResolventScheme& scheme,
                               const Eigen::VectorXd& reference,
                               double tol = 1e-8);

/* ||b^k-b^{k+1}||_S^2 - ||b^{k+1}-b^{k+2}||_S^2 >= ||Rb^k-Rb^{k+1}||_G^2,
 * with R b^k = b^k - bt^k taken from the stored proximal points. */
TraceCheckReport check_residual_decrease_S(const IterationTrace& trace,
                                           const ResolventScheme& scheme,
                                           double tol = 1e-8);

/* ||b^{k+1}-b^k||_Q^2 <= h(b^k)-h(b^{k+1})
 *                     <= 3/2 ||b^{k-1}-b^k||_Q^2 - 1/2 ||b^{k+1}-b^k||_Q^2
 * for the plain iteration (M = I) of a subdifferential operator. */
TraceCheckReport check_seq_decrease_bracket(const IterationTrace& trace,
                                            const ResolventScheme& scheme,
                                            double tol = 1e-8);

/* the Q-seminorm step sequence must be non-increasing for M = gamma I */
TraceCheckReport check_residual_q_monotone(const IterationTrace& trace,
                                           double tol = 1e-10);

/* CSV trace: header k,res_S,res_Q,objective,ergodic_objective,dist_ref,
 * empty fields for absent quantities, shortest round-trip decimals. */
void write_trace_csv(const IterationTrace& trace, const std::string& path);
std::string trace_csv_string(const IterationTrace& trace);

/* JSON sidecar with scheme metadata (dimensions, relaxation, modulus,
 * metric norms, spectral bounds of S and M^{-T} G M^{-1}). */
std::string trace_sidecar_json(const IterationTrace& trace,
                               const ResolventScheme& scheme);
void write_trace_sidecar(const IterationTrace& trace,
                         const ResolventScheme& scheme,
                         const std::string& path);

} // namespace mr
