/*=============================================================================
 * The metric resolvent T = (A + Q)^{-1} Q and its relatives: the
 * complement R = I - T, the scalar-relaxed map I + gamma(T - I), and the
 * matrix-corrected map I + M(T - I) evaluated as a two-step
 * proximal/correction pair.
 *
 * Evaluating T means solving the inclusion  0 in A(bt) + Q(bt - b).
 * Written against the block structure of A this is
 *
 *     0 in dPhi(bt) + K bt - r,    K = L + Q,  r = Q b + shift.
 *
 * Three solve strategies cover every scheme the toolkit builds:
 *   - dense_linear: A affine, one cached factorization of (H + L + Q);
 *   - block_triangular: rows of zero-blocks (multipliers) are linear, so
 *     they are eliminated through a cached factorization of their own
 *     coupling; the remaining prox blocks must order into a triangular
 *     sweep, each solved against its effective diagonal metric;
 *   - scalar_prox: the degenerate single-block case of the sweep.
 * The admissibility of a strategy is decided structurally at construction
 * and failures name the offending block.
 *
 * Every evaluation carries a certificate: a subgradient selection
 * g in A(bt) realized from the proximal computations, with
 * ||g + Q(bt - b)|| <= 1e-8 (1 + ||b||) enforced.
 *============================================================================*/
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "metric.hpp"
#include "operators.hpp"

namespace mr {

enum class SolveStrategy { block_triangular, dense_linear, scalar_prox };

const char* to_string(SolveStrategy s);

struct ApplyResult {
    Eigen::VectorXd b_tilde;
    Eigen::VectorXd selection;   // member of A(b_tilde)
    double residual;             // ||selection + Q(b_tilde - b)||
};

class ResolventScheme {
public:
    /* M = I (plain fixed-point map) */
    static ResolventScheme make(MonotoneBlockOperator op, Metric q);
    /* M = gamma I */
    static ResolventScheme make_relaxed(MonotoneBlockOperator op, Metric q,
                                        double gamma);
    /* general correction matrix */
    static ResolventScheme make_generalized(MonotoneBlockOperator op, Metric q,
                                            Eigen::MatrixXd m);

    Eigen::Index dim() const { return op_->dim(); }
    const MonotoneBlockOperator& op() const { return *op_; }
    const Metric& metric() const { return q_; }
    const Eigen::MatrixXd& correction() const { return m_; }
    bool scalar_correction() const { return gamma_.has_value(); }
    double gamma() const;
    SolveStrategy strategy() const { return strategy_; }

    /* S = Q M^{-1} and G = Q + Q^T - M^T Q, classified; these gate the
     * contraction statements of the corrected iteration */
    const Metric& s_metric() const { return s_; }
    const Metric& g_metric() const { return g_; }
    const Eigen::MatrixXd& mgm_matrix() const { return mgm_; }
    double lambda_max_S() const { return lambda_max_s_; }
    double lambda_min_S() const { return s_.lambda_min_sym(); }
    double lambda_min_MGM() const { return lambda_min_mgm_; }
    double lambda_max_MGM() const { return lambda_max_mgm_; }

    Eigen::VectorXd apply_T(const Eigen::VectorXd& b) const;
    ApplyResult apply_T_certified(const Eigen::VectorXd& b) const;
    Eigen::VectorXd apply_R(const Eigen::VectorXd& b) const;

    /* proximal step + correction step: returns (b_next, b_tilde) with
     * b_next = b + M (b_tilde - b) */
    std::pair<Eigen::VectorXd, Eigen::VectorXd>
    apply_generalized(const Eigen::VectorXd& b) const;

private:
    ResolventScheme() = default;
    void prepare();

    std::shared_ptr<const MonotoneBlockOperator> op_;
    Metric q_;
    Eigen::MatrixXd m_;
    std::optional<double> gamma_;

    Metric s_, g_;
    Eigen::MatrixXd mgm_;
    double lambda_max_s_ = 0.0, lambda_min_mgm_ = 0.0, lambda_max_mgm_ = 0.0;

    SolveStrategy strategy_ = SolveStrategy::dense_linear;
    struct Plan;
    std::shared_ptr<const Plan> plan_;
};

/* argmin_x h(x) + 0.5 ||x - b||_Q^2 for symmetric PD Q; supported pairs:
 * any h with a scalar metric, separable h with a diagonal metric,
 * quadratic-type h with an arbitrary SPD metric, and point indicators
 * (metric-independent). */
Eigen::VectorXd generalized_prox(const ProxFn& h, const Metric& q,
                                 const Eigen::VectorXd& b);

/* (p, d) with p = prox_h^Q(b), d = Q^{-1} prox_{h*}^{Q^{-1}}(Q b);
 * the identity p + d = b is the caller-checkable contract. */
std::pair<Eigen::VectorXd, Eigen::VectorXd>
moreau_decompose(const ProxFn& h, const Metric& q, const Eigen::VectorXd& b);

struct PropertyReport {
    std::string name;
    int samples = 0;
    double worst_margin = 0.0;  // >= 0 means the inequality held throughout
    int violations = 0;         // margins below -1e-8
    bool pass = true;
};

/* <b1-b2, Tb1-Tb2>_Q >= ||Tb1-Tb2||_Q^2 on sampled pairs (raw bilinear
 * form, no assumption on Q), plus the twin statement for R in the
 * transposed metric. With mu > 0 and a PD metric the strengthened factor
 * (1 + mu/||Q||) is asserted instead. */
std::vector<PropertyReport>
check_partial_nonexpansive(const ResolventScheme& scheme, int samples,
                           std::uint64_t seed);

/* Averagedness certificate for the relaxed map: K = I + (1/alpha)(T_gamma - I)
 * must be xi-Lipschitz in the Q-seminorm, with (xi, alpha) = (1, gamma/2)
 * for monotone A and the sharpened pair under strong monotonicity.
 * Requires symmetric PSD Q and scalar correction. */
PropertyReport check_averagedness(const ResolventScheme& scheme, int samples,
                                  std::uint64_t seed);

} // namespace mr
