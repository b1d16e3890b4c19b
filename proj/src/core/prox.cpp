#include "prox.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double soft_threshold(double v, double t)
{
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

void require_dim(const ProxFn& fn, const Eigen::VectorXd& b, const char* op)
{
    if (b.size() != fn.dim()) {
        std::ostringstream msg;
        msg << op << ": dimension mismatch (function dim " << fn.dim()
            << ", point dim " << b.size() << ")";
        throw Error(ErrorCode::dimension_mismatch, msg.str());
    }
}

} // namespace

const char* to_string(ProxKind k)
{
    switch (k) {
    case ProxKind::zero: return "zero";
    case ProxKind::l1: return "l1";
    case ProxKind::squared_l2: return "squared_l2";
    case ProxKind::box_indicator: return "box_indicator";
    case ProxKind::box_support: return "box_support";
    case ProxKind::quadratic: return "quadratic";
    }
    return "unknown";
}

ProxFn ProxFn::zero(Eigen::Index dim)
{
    if (dim <= 0)
        throw Error(ErrorCode::invalid_argument, "zero: dim must be positive");
    return ProxFn(ProxKind::zero, dim);
}

ProxFn ProxFn::l1(double weight, Eigen::Index dim)
{
    if (!(weight > 0.0))
        throw Error(ErrorCode::invalid_argument, "l1: weight must be positive");
    if (dim <= 0)
        throw Error(ErrorCode::invalid_argument, "l1: dim must be positive");
    ProxFn fn(ProxKind::l1, dim);
    fn.weight_ = weight;
    return fn;
}

ProxFn ProxFn::squared_l2(double weight, Eigen::VectorXd center)
{
    if (!(weight > 0.0))
        throw Error(ErrorCode::invalid_argument,
                    "squared_l2: weight must be positive");
    ProxFn fn(ProxKind::squared_l2, center.size());
    fn.weight_ = weight;
    fn.center_ = std::move(center);
    return fn;
}

ProxFn ProxFn::box_indicator(Eigen::VectorXd lower, Eigen::VectorXd upper)
{
    if (lower.size() != upper.size() || lower.size() == 0)
        throw Error(ErrorCode::invalid_argument,
                    "box_indicator: bounds must be nonempty and equal-sized");
    if ((upper - lower).minCoeff() < 0.0)
        throw Error(ErrorCode::invalid_argument,
                    "box_indicator: requires lower <= upper");
    ProxFn fn(ProxKind::box_indicator, lower.size());
    fn.lower_ = std::move(lower);
    fn.upper_ = std::move(upper);
    return fn;
}

ProxFn ProxFn::box_support(Eigen::VectorXd lower, Eigen::VectorXd upper)
{
    if (lower.size() != upper.size() || lower.size() == 0)
        throw Error(ErrorCode::invalid_argument,
                    "box_support: bounds must be nonempty and equal-sized");
    if ((upper - lower).minCoeff() < 0.0)
        throw Error(ErrorCode::invalid_argument,
                    "box_support: requires lower <= upper");
    ProxFn fn(ProxKind::box_support, lower.size());
    fn.lower_ = std::move(lower);
    fn.upper_ = std::move(upper);
    return fn;
}

ProxFn ProxFn::quadratic(Eigen::MatrixXd h, Eigen::VectorXd q)
{
    if (h.rows() != h.cols() || h.rows() != q.size())
        throw Error(ErrorCode::invalid_argument,
                    "quadratic: H must be square and match q");
    double scale = h.size() ? h.cwiseAbs().maxCoeff() : 0.0;
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + scale))
        throw Error(ErrorCode::invalid_argument, "quadratic: H must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin < -1e-9 * (1.0 + scale))
        throw Error(ErrorCode::invalid_argument,
                    "quadratic: H must be positive semidefinite");
    ProxFn fn(ProxKind::quadratic, q.size());
    fn.hessian_ = std::move(h);
    fn.linear_ = std::move(q);
    fn.hessian_lambda_min_ = std::max(lmin, 0.0);
    return fn;
}

Eigen::VectorXd ProxFn::prox(const Eigen::VectorXd& b, double tau) const
{
    require_dim(*this, b, "prox");
    if (!(tau > 0.0))
        throw Error(ErrorCode::invalid_argument, "prox: tau must be positive");

    switch (kind_) {
    case ProxKind::zero:
        return b;
    case ProxKind::l1: {
        Eigen::VectorXd p(dim_);
        double t = tau * weight_;
        for (Eigen::Index i = 0; i < dim_; ++i) p(i) = soft_threshold(b(i), t);
        return p;
    }
    case ProxKind::squared_l2:
        return (b + tau * weight_ * center_) / (1.0 + tau * weight_);
    case ProxKind::box_indicator:
        return b.cwiseMax(lower_).cwiseMin(upper_);
    case ProxKind::box_support: {
        Eigen::VectorXd p(dim_);
        for (Eigen::Index i = 0; i < dim_; ++i) {
            double hi = b(i) - tau * upper_(i);
            double lo = b(i) - tau * lower_(i);
            p(i) = hi > 0.0 ? hi : (lo < 0.0 ? lo : 0.0);
        }
        return p;
    }
    case ProxKind::quadratic: {
        Eigen::MatrixXd sys =
            Eigen::MatrixXd::Identity(dim_, dim_) + tau * hessian_;
        return sys.ldlt().solve(b - tau * linear_);
    }
    }
    throw Error(ErrorCode::internal, "prox: unhandled kind");
}

Eigen::VectorXd ProxFn::prox_diag(const Eigen::VectorXd& b,
                                  const Eigen::VectorXd& diag) const
{
    require_dim(*this, b, "prox_diag");
    if (diag.size() != dim_)
        throw Error(ErrorCode::dimension_mismatch,
                    "prox_diag: metric diagonal has wrong size");
    if (diag.minCoeff() <= 0.0)
        throw Error(ErrorCode::invalid_argument,
                    "prox_diag: metric diagonal must be positive");
    if (!is_separable())
        throw Error(ErrorCode::unsupported,
                    std::string("prox_diag: kind ") + to_string(kind_) +
                        " is not separable");

    switch (kind_) {
    case ProxKind::zero:
        return b;
    case ProxKind::l1: {
        Eigen::VectorXd p(dim_);
        for (Eigen::Index i = 0; i < dim_; ++i)
            p(i) = soft_threshold(b(i), weight_ / diag(i));
        return p;
    }
    case ProxKind::squared_l2: {
        Eigen::VectorXd p(dim_);
        for (Eigen::Index i = 0; i < dim_; ++i)
            p(i) = (diag(i) * b(i) + weight_ * center_(i)) / (diag(i) + weight_);
        return p;
    }
    case ProxKind::box_indicator:
        return b.cwiseMax(lower_).cwiseMin(upper_);
    case ProxKind::box_support: {
        Eigen::VectorXd p(dim_);
        for (Eigen::Index i = 0; i < dim_; ++i) {
            double tau = 1.0 / diag(i);
            double hi = b(i) - tau * upper_(i);
            double lo = b(i) - tau * lower_(i);
            p(i) = hi > 0.0 ? hi : (lo < 0.0 ? lo : 0.0);
        }
        return p;
    }
    default:
        throw Error(ErrorCode::internal, "prox_diag: unhandled kind");
    }
}

double ProxFn::value(const Eigen::VectorXd& x) const
{
    require_dim(*this, x, "value");
    switch (kind_) {
    case ProxKind::zero:
        return 0.0;
    case ProxKind::l1:
        return weight_ * x.lpNorm<1>();
    case ProxKind::squared_l2:
        return 0.5 * weight_ * (x - center_).squaredNorm();
    case ProxKind::box_indicator: {
        for (Eigen::Index i = 0; i < dim_; ++i) {
            double slack =
                1e-12 * (1.0 + std::abs(lower_(i)) + std::abs(upper_(i)));
            if (x(i) < lower_(i) - slack || x(i) > upper_(i) + slack)
                return kInf;
        }
        return 0.0;
    }
    case ProxKind::box_support: {
        double v = 0.0;
        for (Eigen::Index i = 0; i < dim_; ++i)
            v += std::max(lower_(i) * x(i), upper_(i) * x(i));
        return v;
    }
    case ProxKind::quadratic:
        return 0.5 * x.dot(hessian_ * x) + linear_.dot(x);
    }
    throw Error(ErrorCode::internal, "value: unhandled kind");
}

double ProxFn::strong_convexity_modulus() const
{
    switch (kind_) {
    case ProxKind::squared_l2: return weight_;
    case ProxKind::quadratic: return hessian_lambda_min_;
    default: return 0.0;
    }
}

bool ProxFn::is_separable() const
{
    return kind_ != ProxKind::quadratic;
}

bool ProxFn::has_conjugate() const
{
    if (kind_ == ProxKind::quadratic) return hessian_lambda_min_ > 0.0;
    return true;
}

/* Conjugates are exact up to an additive constant, which the proximal maps
 * and the Moreau decomposition never see. */
ProxFn ProxFn::conjugate() const
{
    switch (kind_) {
    case ProxKind::zero:
        // conjugate of 0 is the indicator of {0}
        return box_indicator(Eigen::VectorXd::Zero(dim_),
                             Eigen::VectorXd::Zero(dim_));
    case ProxKind::l1:
        return box_indicator(Eigen::VectorXd::Constant(dim_, -weight_),
                             Eigen::VectorXd::Constant(dim_, weight_));
    case ProxKind::squared_l2: {
        // ((w/2)||x - c||^2)* = (1/(2w))||y||^2 + <c, y>
        Eigen::MatrixXd h =
            (1.0 / weight_) * Eigen::MatrixXd::Identity(dim_, dim_);
        return quadratic(std::move(h), center_);
    }
    case ProxKind::box_indicator:
        return box_support(lower_, upper_);
    case ProxKind::box_support:
        return box_indicator(lower_, upper_);
    case ProxKind::quadratic: {
        if (hessian_lambda_min_ <= 0.0)
            throw Error(ErrorCode::unsupported,
                        "conjugate: quadratic requires a positive definite "
                        "curvature matrix");
        Eigen::MatrixXd hinv = hessian_.ldlt().solve(
            Eigen::MatrixXd::Identity(dim_, dim_));
        hinv = 0.5 * (hinv + hinv.transpose());
        Eigen::VectorXd lin = -hinv * linear_;
        return quadratic(std::move(hinv), std::move(lin));
    }
    }
    throw Error(ErrorCode::internal, "conjugate: unhandled kind");
}

ProxFn ProxFn::scaled(double t) const
{
    if (!(t > 0.0))
        throw Error(ErrorCode::invalid_argument,
                    "scaled: factor must be positive");
    switch (kind_) {
    case ProxKind::zero:
        return *this;
    case ProxKind::l1:
        return l1(t * weight_, dim_);
    case ProxKind::squared_l2:
        return squared_l2(t * weight_, center_);
    case ProxKind::box_indicator:
        return *this;
    case ProxKind::box_support: {
        return box_support(t * lower_, t * upper_);
    }
    case ProxKind::quadratic:
        return quadratic(t * hessian_, t * linear_);
    }
    throw Error(ErrorCode::internal, "scaled: unhandled kind");
}

std::string ProxFn::describe() const
{
    std::ostringstream s;
    s << to_string(kind_) << "(dim=" << dim_;
    if (kind_ == ProxKind::l1 || kind_ == ProxKind::squared_l2)
        s << ", weight=" << weight_;
    s << ")";
    return s.str();
}

Eigen::VectorXd eval_prox(const ProxFn& fn, const Eigen::VectorXd& b,
                          double tau)
{
    return fn.prox(b, tau);
}

} // namespace mr
