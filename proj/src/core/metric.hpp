/*=============================================================================
 * Matrix-metric geometry: Q-weighted inner products and (semi)norms,
 * structural classification of a metric (symmetry, definiteness, operator
 * norm, symmetric square roots), and extreme eigenvalues of symmetric
 * matrices.
 *
 * The bilinear form <a|b>_Q = <Qa, b> is evaluated verbatim, without
 * symmetrization; for a metric that is not symmetric PSD the induced
 * quadratic form may be negative and callers decide what that means.
 *============================================================================*/
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>

#include "errors.hpp"

namespace mr {

enum class Symmetry { symmetric, nonsymmetric };
enum class Definiteness { indefinite, psd, pd };

const char* to_string(Symmetry s);
const char* to_string(Definiteness d);

class Metric {
public:
    Metric() = default; // empty; populate through classify()

    /* Classify a square matrix: symmetry within an absolute tolerance of
     * 1e-9 scaled by (1 + ||Q||), definiteness from the eigenvalues of the
     * symmetric part with the same tolerance (eigenvalues inside the
     * tolerance band count as zero), operator norm from the SVD.
     * Square roots are attached iff the matrix is symmetric PD. */
    static Metric classify(const Eigen::MatrixXd& m);

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    Eigen::Index dim() const { return matrix_.rows(); }

    Symmetry symmetry() const { return symmetry_; }
    bool is_symmetric() const { return symmetry_ == Symmetry::symmetric; }
    Definiteness definiteness() const { return definiteness_; }
    bool is_spd() const
    {
        return is_symmetric() && definiteness_ == Definiteness::pd;
    }
    bool is_symmetric_psd() const
    {
        return is_symmetric() && definiteness_ != Definiteness::indefinite;
    }

    double op_norm() const { return op_norm_; }

    /* extreme eigenvalues of (Q + Q^T)/2 */
    double lambda_min_sym() const { return lambda_min_sym_; }
    double lambda_max_sym() const { return lambda_max_sym_; }

    bool has_sqrt_pair() const { return sqrt_pair_.has_value(); }
    const Eigen::MatrixXd& sqrt() const;
    const Eigen::MatrixXd& inv_sqrt() const;

    double classification_tolerance() const { return tol_; }

private:
    Eigen::MatrixXd matrix_;
    Symmetry symmetry_ = Symmetry::nonsymmetric;
    Definiteness definiteness_ = Definiteness::indefinite;
    double op_norm_ = 0.0;
    double lambda_min_sym_ = 0.0;
    double lambda_max_sym_ = 0.0;
    double tol_ = 0.0;
    std::optional<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> sqrt_pair_;
};

Metric classify_metric(const Eigen::MatrixXd& m);

/* <Qa, b>, the raw bilinear form. */
double q_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
               const Metric& q);

/* <Qa, a>; may be negative for metrics outside the symmetric PSD class. */
double q_norm_sq(const Eigen::VectorXd& a, const Metric& q);

/* sqrt of the quadratic form with negative round-off clamped to zero;
 * a genuine seminorm only when the metric is symmetric PSD. */
double q_norm(const Eigen::VectorXd& a, const Metric& q);

/* Same forms evaluated against a raw matrix (used where building a full
 * Metric would be wasteful, e.g. per-iterate G-norms). */
double weighted_norm_sq(const Eigen::VectorXd& a, const Eigen::MatrixXd& w);
double weighted_norm(const Eigen::VectorXd& a, const Eigen::MatrixXd& w);

/* Extreme eigenvalues (lambda_min, lambda_max) of a symmetric matrix;
 * rejects inputs that are not symmetric within tolerance. */
std::pair<double, double> spectral_bounds(const Eigen::MatrixXd& sym);

/* Largest singular value. */
double operator_norm(const Eigen::MatrixXd& m);

} // namespace mr
