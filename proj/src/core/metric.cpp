#include "metric.hpp"

#include <cmath>
#include <sstream>

namespace mr {

namespace {

void require_same_dim(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      const Metric& q, const char* op)
{
    if (a.size() != b.size() || a.size() != q.dim()) {
        std::ostringstream msg;
        msg << op << ": dimension mismatch (a: " << a.size()
            << ", b: " << b.size() << ", metric: " << q.dim() << ")";
        throw Error(ErrorCode::dimension_mismatch, msg.str());
    }
}

} // namespace

const char* to_string(Symmetry s)
{
    return s == Symmetry::symmetric ? "symmetric" : "nonsymmetric";
}

const char* to_string(Definiteness d)
{
    switch (d) {
    case Definiteness::pd: return "pd";
    case Definiteness::psd: return "psd";
    case Definiteness::indefinite: return "indefinite";
    }
    return "unknown";
}

double operator_norm(const Eigen::MatrixXd& m)
{
    if (m.size() == 0) return 0.0;
    if (m.rows() <= 16 && m.cols() <= 16) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        return svd.singularValues()(0);
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

Metric Metric::classify(const Eigen::MatrixXd& m)
{
    if (m.rows() != m.cols()) {
        std::ostringstream msg;
        msg << "classify_metric: matrix must be square, got " << m.rows()
            << "x" << m.cols();
        throw Error(ErrorCode::invalid_argument, msg.str());
    }
    if (m.rows() == 0)
        throw Error(ErrorCode::invalid_argument,
                    "classify_metric: empty matrix");
    if (!m.allFinite())
        throw Error(ErrorCode::invalid_argument,
                    "classify_metric: matrix has non-finite entries");

    Metric q;
    q.matrix_ = m;
    q.op_norm_ = operator_norm(m);
    q.tol_ = 1e-9 * (1.0 + q.op_norm_);

    double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    q.symmetry_ =
        asym <= q.tol_ ? Symmetry::symmetric : Symmetry::nonsymmetric;

    Eigen::MatrixXd sym_part = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym_part);
    if (es.info() != Eigen::Success)
        throw Error(ErrorCode::internal,
                    "classify_metric: eigensolver failed on symmetric part");
    Eigen::VectorXd ev = es.eigenvalues();
    q.lambda_min_sym_ = ev.minCoeff();
    q.lambda_max_sym_ = ev.maxCoeff();

    // eigenvalues inside the tolerance band count as exactly zero
    double lo = q.lambda_min_sym_;
    if (std::abs(lo) <= q.tol_) lo = 0.0;
    if (lo > 0.0)
        q.definiteness_ = Definiteness::pd;
    else if (lo == 0.0)
        q.definiteness_ = Definiteness::psd;
    else
        q.definiteness_ = Definiteness::indefinite;

    if (q.is_symmetric() && q.definiteness_ == Definiteness::pd) {
        // eigendecompose the matrix itself for the symmetric square roots
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esq(m);
        if (esq.info() != Eigen::Success)
            throw Error(ErrorCode::internal,
                        "classify_metric: eigensolver failed on metric");
        Eigen::VectorXd lam = esq.eigenvalues();
        Eigen::VectorXd rt = lam.cwiseSqrt();
        Eigen::MatrixXd v = esq.eigenvectors();
        Eigen::MatrixXd root = v * rt.asDiagonal() * v.transpose();
        Eigen::MatrixXd inv_root =
            v * rt.cwiseInverse().asDiagonal() * v.transpose();
        q.sqrt_pair_ = std::make_pair(std::move(root), std::move(inv_root));
    }
    return q;
}

Metric classify_metric(const Eigen::MatrixXd& m) { return Metric::classify(m); }

const Eigen::MatrixXd& Metric::sqrt() const
{
    if (!sqrt_pair_)
        throw Error(ErrorCode::unsupported,
                    "metric square root requires a symmetric PD metric");
    return sqrt_pair_->first;
}

const Eigen::MatrixXd& Metric::inv_sqrt() const
{
    if (!sqrt_pair_)
        throw Error(ErrorCode::unsupported,
                    "metric square root requires a symmetric PD metric");
    return sqrt_pair_->second;
}

double q_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
               const Metric& q)
{
    require_same_dim(a, b, q, "q_inner");
    return (q.matrix() * a).dot(b);
}

double q_norm_sq(const Eigen::VectorXd& a, const Metric& q)
{
    require_same_dim(a, a, q, "q_norm_sq");
    return (q.matrix() * a).dot(a);
}

double q_norm(const Eigen::VectorXd& a, const Metric& q)
{
    return std::sqrt(std::max(q_norm_sq(a, q), 0.0));
}

double weighted_norm_sq(const Eigen::VectorXd& a, const Eigen::MatrixXd& w)
{
    if (a.size() != w.rows() || w.rows() != w.cols())
        throw Error(ErrorCode::dimension_mismatch,
                    "weighted_norm_sq: dimension mismatch");
    return (w * a).dot(a);
}

double weighted_norm(const Eigen::VectorXd& a, const Eigen::MatrixXd& w)
{
    return std::sqrt(std::max(weighted_norm_sq(a, w), 0.0));
}

std::pair<double, double> spectral_bounds(const Eigen::MatrixXd& sym)
{
    if (sym.rows() != sym.cols())
        throw Error(ErrorCode::invalid_argument,
                    "spectral_bounds: matrix must be square");
    double scale = sym.cwiseAbs().maxCoeff();
    double asym = (sym - sym.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9 * (1.0 + scale))
        throw Error(ErrorCode::invalid_argument,
                    "spectral_bounds: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (sym + sym.transpose()), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw Error(ErrorCode::internal, "spectral_bounds: eigensolver failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    return {ev.minCoeff(), ev.maxCoeff()};
}

} // namespace mr
