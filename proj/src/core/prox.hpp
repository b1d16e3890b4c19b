/*=============================================================================
 * Closed-form proximable functions: the building blocks every operator in
 * the toolkit is assembled from. Each kind knows its proximal map, its
 * function value, its strong-convexity modulus, whether it is separable
 * (coordinate-wise), and, where available, its convex conjugate.
 *============================================================================*/
#pragma once

#include <Eigen/Dense>
#include <string>

#include "errors.hpp"

namespace mr {

enum class ProxKind {
    zero,           // h = 0
    l1,             // h(x) = w * ||x||_1
    squared_l2,     // h(x) = (w/2) * ||x - center||^2
    box_indicator,  // h = indicator of [lower, upper]
    box_support,    // h(y) = sum_i max(lower_i*y_i, upper_i*y_i)  (conjugate of a box)
    quadratic,      // h(x) = 0.5 x^T H x + q^T x,  H symmetric PSD
};

const char* to_string(ProxKind k);

class ProxFn {
public:
    static ProxFn zero(Eigen::Index dim);
    static ProxFn l1(double weight, Eigen::Index dim);
    static ProxFn squared_l2(double weight, Eigen::VectorXd center);
    static ProxFn box_indicator(Eigen::VectorXd lower, Eigen::VectorXd upper);
    static ProxFn box_support(Eigen::VectorXd lower, Eigen::VectorXd upper);
    static ProxFn quadratic(Eigen::MatrixXd h, Eigen::VectorXd q);

    ProxKind kind() const { return kind_; }
    Eigen::Index dim() const { return dim_; }

    /* argmin_x h(x) + (1/(2 tau)) ||x - b||^2 */
    Eigen::VectorXd prox(const Eigen::VectorXd& b, double tau) const;

    /* per-coordinate prox under a diagonal metric: argmin of
     * h(x) + 0.5 sum_i d_i (x_i - b_i)^2; requires a separable kind. */
    Eigen::VectorXd prox_diag(const Eigen::VectorXd& b,
                              const Eigen::VectorXd& diag) const;

    /* h(x); +inf outside the domain of an indicator (with a small
     * round-off slack so prox outputs always evaluate finite). */
    double value(const Eigen::VectorXd& x) const;

    /* strong-convexity modulus: weight for squared_l2, lambda_min(H) for
     * quadratic, zero otherwise */
    double strong_convexity_modulus() const;

    bool is_separable() const;
    bool is_affine_zero() const { return kind_ == ProxKind::zero; }

    bool has_conjugate() const;
    ProxFn conjugate() const;

    /* t * h for t > 0 (indicator kinds are invariant) */
    ProxFn scaled(double t) const;

    // kind payload accessors
    double weight() const { return weight_; }
    const Eigen::VectorXd& center() const { return center_; }
    const Eigen::VectorXd& lower() const { return lower_; }
    const Eigen::VectorXd& upper() const { return upper_; }
    const Eigen::MatrixXd& hessian() const { return hessian_; }
    const Eigen::VectorXd& linear() const { return linear_; }

    std::string describe() const;

private:
    ProxFn(ProxKind kind, Eigen::Index dim) : kind_(kind), dim_(dim) {}

    ProxKind kind_;
    Eigen::Index dim_;
    double weight_ = 0.0;
    Eigen::VectorXd center_;
    Eigen::VectorXd lower_, upper_;
    Eigen::MatrixXd hessian_;
    Eigen::VectorXd linear_;
    double hessian_lambda_min_ = 0.0;
};

/* Free-function form mirroring prox(b, tau); validates tau > 0. */
Eigen::VectorXd eval_prox(const ProxFn& fn, const Eigen::VectorXd& b,
                          double tau);

} // namespace mr
