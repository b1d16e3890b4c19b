/*=============================================================================
 * The algorithm gallery: builders that express classical first-order
 * splitting methods as corrected fixed-point schemes of one metric
 * resolvent, plus an independent "native" twin for each method that runs
 * the literal textbook update equations.
 *
 * Twins share nothing with the resolvent path except the proximal
 * primitives; every piece of matrix algebra is duplicated on purpose so
 * iterate-level equivalence tests cannot be tautological.
 *
 * Problem templates:
 *   two_block_constrained   min f(x) + g(u)  s.t.  A x + B u = c
 *   composite               min f(x) + g(A x)
 *   linear_equality         min h(x)         s.t.  A x = c
 *
 * Shipped seeded generators: lasso (orthogonal-column design, all three
 * forms), an equality-constrained strongly convex QP, and basis pursuit.
 *============================================================================*/
#pragma once

#include <cstdint>
#include <functional>

#include <json.hpp>

#include "resolvent.hpp"

namespace mr {

enum class ProblemKind { two_block_constrained, composite, linear_equality };

const char* to_string(ProblemKind k);

struct SplittingProblem {
    ProblemKind kind;
    std::optional<ProxFn> f, g, h;
    Eigen::MatrixXd a_mat; // coupling matrix A
    Eigen::MatrixXd b_mat; // B (two-block template only)
    Eigen::VectorXd rhs;   // c (constrained templates)

    static SplittingProblem two_block(ProxFn f, ProxFn g, Eigen::MatrixXd a,
                                      Eigen::MatrixXd b, Eigen::VectorXd c);
    static SplittingProblem composite(ProxFn f, ProxFn g, Eigen::MatrixXd a);
    static SplittingProblem linear_equality(ProxFn h, Eigen::MatrixXd a,
                                            Eigen::VectorXd c);

    Eigen::Index primal_dim() const;
};

struct AlgoParams {
    double tau = 0.0;
    double sigma = 0.0;
    double gamma = 0.0;
    double rho = 0.0;
    std::optional<Eigen::MatrixXd> p1, p2; // proximal-ADMM weights
};

enum class AlgorithmKind {
    relaxed_admm,
    proximal_admm,
    pdhg_mp,
    pdhg_mu,
    alm,
    linearized_alm,
    linearized_bregman,
};

const char* to_string(AlgorithmKind k);
std::optional<AlgorithmKind> algorithm_from_name(const std::string& name);
std::vector<AlgorithmKind> all_algorithms();

/* ---- fixed-point scheme builders ------------------------------------- */

/* state (x, u, s); relaxation gamma in (0, 2); gamma = 1 recovers the
 * standard two-block method */
ResolventScheme build_relaxed_admm(const SplittingProblem& p, double tau,
                                   double gamma);

/* state (x, u, s); P1, P2 symmetric PSD proximal weights */
ResolventScheme build_proximal_admm(const SplittingProblem& p, double tau,
                                    const Eigen::MatrixXd& p1,
                                    const Eigen::MatrixXd& p2);

/* state (s, x); requires sigma tau ||A||^2 < 1 so the metric is PD */
ResolventScheme build_pdhg_mp(const SplittingProblem& p, double sigma,
                              double tau);

/* state (s, x^{k-1}): the primal component lags one index */
ResolventScheme build_pdhg_mu(const SplittingProblem& p, double sigma,
                              double tau);

/* state (x, s); x-subproblem must admit a closed-form solve */
ResolventScheme build_alm(const SplittingProblem& p, double tau);

/* state (x, s); requires rho > tau ||A^T A|| so the metric is PD */
ResolventScheme build_linearized_alm(const SplittingProblem& p, double tau,
                                     double rho);

/* state (x, s); requires 1/rho >= ||A^T A|| so the operator certifies
 * monotone */
ResolventScheme build_linearized_bregman(const SplittingProblem& p, double tau,
                                         double rho);

ResolventScheme build_algorithm(AlgorithmKind alg, const SplittingProblem& p,
                                const AlgoParams& params);

/* ---- native twins ----------------------------------------------------- */

struct NativeState {
    Eigen::VectorXd x, u, s;
    Eigen::VectorXd x_prev; // lagged primal (PDHGMu only)
};

class NativeTwin {
public:
    using Step = std::function<NativeState(const NativeState&)>;
    using Pack = std::function<Eigen::VectorXd(const NativeState&)>;
    using Seed = std::function<NativeState(const Eigen::VectorXd&)>;

    NativeTwin(AlgorithmKind kind, Step step, Pack pack, Seed seed)
        : kind_(kind), step_(std::move(step)), pack_(std::move(pack)),
          seed_(std::move(seed)) {}

    AlgorithmKind kind() const { return kind_; }
    /* one literal textbook update; pure transition */
    NativeState step(const NativeState& st) const { return step_(st); }
    /* stack a native state into the scheme's iterate layout */
    Eigen::VectorXd pack(const NativeState& st) const { return pack_(st); }
    /* native starting state matching a scheme starting vector */
    NativeState seed_state(const Eigen::VectorXd& b0) const
    {
        return seed_(b0);
    }

private:
    AlgorithmKind kind_;
    Step step_;
    Pack pack_;
    Seed seed_;
};

NativeTwin make_native(AlgorithmKind alg, const SplittingProblem& p,
                       const AlgoParams& params);

/* max over 'steps' iterations of the relative gap between the scheme
 * iterates and the packed native iterates, both started from b0 */
double twin_max_drift(const ResolventScheme& scheme, const NativeTwin& twin,
                      const Eigen::VectorXd& b0, int steps);

/* ---- optimality certificates ------------------------------------------ */

struct KktReport {
    double feasibility = 0.0;
    double stationarity = 0.0;
    bool pass = true; // both residuals below the tolerance
};

/* First-order conditions of the problem the algorithm actually solves
 * (the linearized Bregman twin certifies the rho-regularized problem),
 * evaluated at a scheme-layout point via proximal residuals. */
KktReport kkt_residual(AlgorithmKind alg, const SplittingProblem& p,
                       const AlgoParams& params, const Eigen::VectorXd& point,
                       double tol = 1e-7);

/* ---- shipped problem generators ---------------------------------------- */

SplittingProblem lasso_composite(int dim, std::uint64_t seed);
SplittingProblem lasso_two_block(int dim, std::uint64_t seed);
/* single-operator form dPhi = lambda d||.||_1 + D^T D x - D^T y with an
 * orthogonal-column design so the proximal step stays closed-form */
MonotoneBlockOperator lasso_single_operator(int dim, std::uint64_t seed);

/* equality-constrained strongly convex QP (h quadratic PD, dim/2 rows) */
SplittingProblem qp_equality(int dim, std::uint64_t seed);
/* its unconstrained operator A = dh, strongly monotone */
MonotoneBlockOperator qp_operator(int dim, std::uint64_t seed);

/* min ||x||_1 s.t. Ax = c with a consistent sparse ground truth */
SplittingProblem basis_pursuit(int dim, std::uint64_t seed);

/* ---- problem instance (de)serialization -------------------------------- */

/* {kind, functions, matrices (row-major arrays + shape), seed}; validation
 * errors carry the offending field path */
SplittingProblem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const SplittingProblem& p);

ProxFn proxfn_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json proxfn_to_json(const ProxFn& fn);

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j,
                                 const std::string& path);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);

} // namespace mr
