#include "operators.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "metric.hpp"
#include "random.hpp"

namespace mr {

namespace {

bool linear_friendly(const ProxFn& fn)
{
    switch (fn.kind()) {
    case ProxKind::zero:
    case ProxKind::squared_l2:
    case ProxKind::quadratic:
        return true;
    default:
        return false;
    }
}

} // namespace

MonotoneBlockOperator::MonotoneBlockOperator(std::vector<ProxFn> blocks,
                                             Eigen::MatrixXd linear_part,
                                             Eigen::VectorXd shift, double mu)
    : blocks_(std::move(blocks)), linear_(std::move(linear_part)),
      shift_(std::move(shift)), mu_(mu)
{
    if (blocks_.empty())
        throw Error(ErrorCode::invalid_argument,
                    "operator: at least one block required");
    offsets_.reserve(blocks_.size());
    for (const ProxFn& b : blocks_) {
        offsets_.push_back(dim_);
        dim_ += b.dim();
    }
    if (linear_.rows() != dim_ || linear_.cols() != dim_) {
        std::ostringstream msg;
        msg << "operator: coupling matrix is " << linear_.rows() << "x"
            << linear_.cols() << " but blocks sum to " << dim_;
        throw Error(ErrorCode::dimension_mismatch, msg.str());
    }
    if (shift_.size() != dim_)
        throw Error(ErrorCode::dimension_mismatch,
                    "operator: shift does not match total dimension");
    if (mu_ < 0.0)
        throw Error(ErrorCode::invalid_argument,
                    "operator: strong-monotonicity modulus must be >= 0");

    Eigen::MatrixXd sym = 0.5 * (linear_ + linear_.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym,
                                                      Eigen::EigenvaluesOnly);
    linear_sym_lambda_min_ = es.eigenvalues().minCoeff();

    double min_block_mu = std::numeric_limits<double>::infinity();
    for (const ProxFn& b : blocks_)
        min_block_mu = std::min(min_block_mu, b.strong_convexity_modulus());
    double mu_cap = linear_sym_lambda_min_ + min_block_mu;
    double tol = 1e-9 * (1.0 + std::abs(mu_cap));
    if (mu_ > mu_cap + tol) {
        std::ostringstream msg;
        msg << "operator: certified modulus " << mu_
            << " exceeds the structural cap " << mu_cap;
        throw Error(ErrorCode::invalid_argument, msg.str());
    }

    affine_ = true;
    for (const ProxFn& b : blocks_)
        if (!linear_friendly(b)) { affine_ = false; break; }
    if (affine_) {
        affine_hessian_ = Eigen::MatrixXd::Zero(dim_, dim_);
        affine_linear_ = Eigen::VectorXd::Zero(dim_);
        for (std::size_t j = 0; j < blocks_.size(); ++j) {
            const ProxFn& b = blocks_[j];
            Eigen::Index o = offsets_[j], n = b.dim();
            if (b.kind() == ProxKind::quadratic) {
                affine_hessian_.block(o, o, n, n) = b.hessian();
                affine_linear_.segment(o, n) = b.linear();
            } else if (b.kind() == ProxKind::squared_l2) {
                affine_hessian_.block(o, o, n, n) =
                    b.weight() * Eigen::MatrixXd::Identity(n, n);
                affine_linear_.segment(o, n) = -b.weight() * b.center();
            }
        }
    }

    double scale = linear_.size() ? linear_.cwiseAbs().maxCoeff() : 0.0;
    bool sym_coupling =
        (linear_ - linear_.transpose()).cwiseAbs().maxCoeff() <=
        1e-9 * (1.0 + scale);
    bool psd_coupling =
        linear_sym_lambda_min_ >= -1e-9 * (1.0 + std::abs(linear_sym_lambda_min_));
    has_objective_ = sym_coupling && psd_coupling;
}

MonotoneBlockOperator
MonotoneBlockOperator::from_blocks(std::vector<ProxFn> blocks, double mu)
{
    Eigen::Index n = 0;
    for (const ProxFn& b : blocks) n += b.dim();
    return MonotoneBlockOperator(std::move(blocks),
                                 Eigen::MatrixXd::Zero(n, n),
                                 Eigen::VectorXd::Zero(n), mu);
}

const Eigen::MatrixXd& MonotoneBlockOperator::affine_hessian() const
{
    if (!affine_)
        throw Error(ErrorCode::unsupported,
                    "operator: not affine, no assembled curvature");
    return affine_hessian_;
}

const Eigen::VectorXd& MonotoneBlockOperator::affine_linear() const
{
    if (!affine_)
        throw Error(ErrorCode::unsupported,
                    "operator: not affine, no assembled linear term");
    return affine_linear_;
}

std::optional<double>
MonotoneBlockOperator::objective_value(const Eigen::VectorXd& x) const
{
    if (x.size() != dim_)
        throw Error(ErrorCode::dimension_mismatch,
                    "objective_value: point does not match operator dim");
    if (!has_objective_) return std::nullopt;
    double v = 0.5 * x.dot(linear_ * x) - shift_.dot(x);
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
        double bv = blocks_[j].value(x.segment(offsets_[j], blocks_[j].dim()));
        if (std::isinf(bv)) return bv;
        v += bv;
    }
    return v;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd>
MonotoneBlockOperator::sample_point_with_selection(std::mt19937_64& rng) const
{
    Eigen::VectorXd z = gaussian_vector(dim_, rng);
    Eigen::VectorXd x(dim_), g(dim_);
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
        Eigen::Index o = offsets_[j], n = blocks_[j].dim();
        Eigen::VectorXd xb = blocks_[j].prox(z.segment(o, n), 1.0);
        x.segment(o, n) = xb;
        g.segment(o, n) = z.segment(o, n) - xb;
    }
    g += linear_ * x - shift_;
    return {std::move(x), std::move(g)};
}

MonotoneBlockOperator::AuditReport
MonotoneBlockOperator::strong_monotonicity_audit(int samples,
                                                 std::uint64_t seed) const
{
    if (samples < 1)
        throw Error(ErrorCode::invalid_argument,
                    "strong_monotonicity_audit: samples must be >= 1");
    std::mt19937_64 rng = make_rng(seed);
    double min_ratio = std::numeric_limits<double>::infinity();
    int used = 0;
    for (int s = 0; s < samples; ++s) {
        auto [x1, g1] = sample_point_with_selection(rng);
        auto [x2, g2] = sample_point_with_selection(rng);
        double denom = (x1 - x2).squaredNorm();
        if (denom < 1e-14) continue; // coincident proximal images
        double ratio = (g1 - g2).dot(x1 - x2) / denom;
        min_ratio = std::min(min_ratio, ratio);
        ++used;
    }
    AuditReport rep;
    rep.min_ratio = min_ratio;
    rep.certified_mu = mu_;
    rep.samples = used;
    rep.violation = used > 0 && min_ratio < mu_ - 1e-8;
    return rep;
}

} // namespace mr
