/*=============================================================================
 * Structured maximal monotone operators: a block-diagonal subdifferential
 * part (one proximable function per block), a square linear coupling
 * (typically skew), and a constant shift,
 *
 *     A(x) = dPhi(x) + L x - shift,   Phi(x) = sum_j phi_j(x_j).
 *
 * The strong-monotonicity modulus is supplied analytically by whoever
 * assembles the operator and is audited by sampling, never inferred.
 * Subdifferential selections are realized operationally through proximal
 * evaluations: x = prox_phi(z), g = z - x is a certified member of
 * dPhi(x) for unit step.
 *============================================================================*/
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <vector>

#include "prox.hpp"

namespace mr {

class MonotoneBlockOperator {
public:
    MonotoneBlockOperator(std::vector<ProxFn> blocks,
                          Eigen::MatrixXd linear_part, Eigen::VectorXd shift,
                          double mu);

    /* blocks only, no coupling */
    static MonotoneBlockOperator from_blocks(std::vector<ProxFn> blocks,
                                             double mu = 0.0);

    Eigen::Index dim() const { return dim_; }
    std::size_t block_count() const { return blocks_.size(); }
    const ProxFn& block(std::size_t j) const { return blocks_[j]; }
    Eigen::Index block_offset(std::size_t j) const { return offsets_[j]; }
    const Eigen::MatrixXd& linear_part() const { return linear_; }
    const Eigen::VectorXd& shift() const { return shift_; }
    double mu() const { return mu_; }

    /* smallest eigenvalue of (L + L^T)/2, cached at construction */
    double linear_sym_lambda_min() const { return linear_sym_lambda_min_; }

    /* true when every block is zero / squared_l2 / quadratic, i.e. the
     * operator is single-valued affine */
    bool is_affine() const { return affine_; }

    /* block-diagonal curvature and linear term of the affine part; only
     * meaningful when is_affine() */
    const Eigen::MatrixXd& affine_hessian() const;
    const Eigen::VectorXd& affine_linear() const;

    /* A potential h with A = dh exists iff the coupling is symmetric PSD
     * (every block is a subdifferential by construction). */
    bool has_objective() const { return has_objective_; }

    /* h(x) = sum_j phi_j(x_j) + 0.5 x^T L x - <shift, x>; absent when no
     * potential exists, +inf outside indicator domains. */
    std::optional<double> objective_value(const Eigen::VectorXd& x) const;

    struct AuditReport {
        double min_ratio;   // min over samples of <Ax-Ay, x-y>/||x-y||^2
        double certified_mu;
        int samples;
        bool violation;     // min_ratio < mu - 1e-8
    };

    /* Sampled strong-monotonicity check; pairs of points are generated as
     * proximal images of Gaussian pre-images so subdifferential selections
     * are certified. */
    AuditReport strong_monotonicity_audit(int samples,
                                          std::uint64_t seed) const;

    /* returns (x, g) with g in dPhi(x) + Lx - shift, from a Gaussian
     * pre-image z: blockwise x = prox(z), g_block = z - x */
    std::pair<Eigen::VectorXd, Eigen::VectorXd>
    sample_point_with_selection(std::mt19937_64& rng) const;

private:
    std::vector<ProxFn> blocks_;
    std::vector<Eigen::Index> offsets_;
    Eigen::Index dim_ = 0;
    Eigen::MatrixXd linear_;
    Eigen::VectorXd shift_;
    double mu_ = 0.0;
    double linear_sym_lambda_min_ = 0.0;
    bool affine_ = false;
    bool has_objective_ = false;
    Eigen::MatrixXd affine_hessian_;
    Eigen::VectorXd affine_linear_;
};

} // namespace mr
