#include "resolvent.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <tuple>

#include "random.hpp"

namespace mr {

namespace {

/* W == c*I within tolerance, c > 0 */
std::optional<double> scalar_of(const Eigen::MatrixXd& w, double tol)
{
    Eigen::Index n = w.rows();
    double c = w.trace() / static_cast<double>(n);
    if ((w - c * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > tol)
        return std::nullopt;
    if (c <= tol) return std::nullopt;
    return c;
}

std::optional<Eigen::VectorXd> diagonal_of(const Eigen::MatrixXd& w, double tol)
{
    Eigen::MatrixXd off = w;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() > tol) return std::nullopt;
    if (w.diagonal().minCoeff() <= tol) return std::nullopt;
    return Eigen::VectorXd(w.diagonal());
}

} // namespace

const char* to_string(SolveStrategy s)
{
    switch (s) {
    case SolveStrategy::block_triangular: return "block_triangular";
    case SolveStrategy::dense_linear: return "dense_linear";
    case SolveStrategy::scalar_prox: return "scalar_prox";
    }
    return "unknown";
}

struct ResolventScheme::Plan {
    Eigen::MatrixXd k; // L + Q

    bool dense = false;
    Eigen::FullPivLU<Eigen::MatrixXd> dense_lu;

    std::vector<std::size_t> z_blocks, p_blocks;
    std::vector<Eigen::Index> z_off, p_off; // offsets inside the packed spaces
    Eigen::Index z_dim = 0, p_dim = 0;

    Eigen::FullPivLU<Eigen::MatrixXd> kzz_lu;
    Eigen::MatrixXd k_pz, k_zp;
    Eigen::MatrixXd k_hat;
    std::vector<std::size_t> order; // positions into p_blocks

    struct BlockSolve {
        enum class Kind { prox_scalar, prox_diag, dense } kind;
        double scalar = 0.0;
        Eigen::VectorXd diag;
        Eigen::FullPivLU<Eigen::MatrixXd> lu;
        bool analytic_selection = false; // quadratic / squared_l2
    };
    std::vector<BlockSolve> solvers;
};

ResolventScheme ResolventScheme::make(MonotoneBlockOperator op, Metric q)
{
    Eigen::Index n = op.dim();
    return make_generalized(std::move(op), std::move(q),
                            Eigen::MatrixXd::Identity(n, n));
}

ResolventScheme ResolventScheme::make_relaxed(MonotoneBlockOperator op,
                                              Metric q, double gamma)
{
    if (!(gamma > 0.0))
        throw Error(ErrorCode::invalid_argument,
                    "scheme: relaxation must be positive");
    Eigen::Index n = op.dim();
    ResolventScheme s = make_generalized(
        std::move(op), std::move(q),
        gamma * Eigen::MatrixXd::Identity(n, n));
    s.gamma_ = gamma;
    return s;
}

ResolventScheme ResolventScheme::make_generalized(MonotoneBlockOperator op,
                                                  Metric q, Eigen::MatrixXd m)
{
    ResolventScheme s;
    s.op_ = std::make_shared<MonotoneBlockOperator>(std::move(op));
    s.q_ = std::move(q);
    s.m_ = std::move(m);
    if (s.q_.dim() != s.op_->dim())
        throw Error(ErrorCode::dimension_mismatch,
                    "scheme: metric does not match operator dimension");
    if (s.m_.rows() != s.op_->dim() || s.m_.cols() != s.op_->dim())
        throw Error(ErrorCode::dimension_mismatch,
                    "scheme: correction matrix does not match operator");
    if (auto c = scalar_of(s.m_, 1e-12 * (1.0 + s.m_.cwiseAbs().maxCoeff())))
        s.gamma_ = *c;
    s.prepare();
    return s;
}

double ResolventScheme::gamma() const
{
    if (!gamma_)
        throw Error(ErrorCode::unsupported,
                    "scheme: correction is not a scalar relaxation");
    return *gamma_;
}

void ResolventScheme::prepare()
{
    const MonotoneBlockOperator& a = *op_;

    // S = Q M^{-1}, G = Q + Q^T - M^T Q, and the correction-weighted G
    Eigen::FullPivLU<Eigen::MatrixXd> mlu(m_);
    if (!mlu.isInvertible())
        throw Error(ErrorCode::singular_system,
                    "scheme: correction matrix is singular");
    Eigen::MatrixXd minv = mlu.inverse();
    const Eigen::MatrixXd& qm = q_.matrix();
    s_ = Metric::classify(qm * minv);
    g_ = Metric::classify(qm + qm.transpose() - m_.transpose() * qm);
    mgm_ = minv.transpose() * g_.matrix() * minv;
    lambda_max_s_ = s_.lambda_max_sym();
    std::tie(lambda_min_mgm_, lambda_max_mgm_) =
        spectral_bounds(0.5 * (mgm_ + mgm_.transpose()));

    auto plan = std::make_shared<Plan>();
    plan->k = a.linear_part() + qm;
    double pattern_tol = 1e-12 * (1.0 + plan->k.cwiseAbs().maxCoeff());

    if (a.is_affine()) {
        plan->dense = true;
        plan->dense_lu.compute(a.affine_hessian() + plan->k);
        if (!plan->dense_lu.isInvertible())
            throw Error(ErrorCode::singular_system,
                        "scheme: affine inclusion system is singular; the "
                        "resolvent is not single-valued");
        strategy_ = SolveStrategy::dense_linear;
        plan_ = std::move(plan);
        return;
    }

    for (std::size_t j = 0; j < a.block_count(); ++j) {
        if (a.block(j).is_affine_zero()) {
            plan->z_off.push_back(plan->z_dim);
            plan->z_dim += a.block(j).dim();
            plan->z_blocks.push_back(j);
        } else {
            plan->p_off.push_back(plan->p_dim);
            plan->p_dim += a.block(j).dim();
            plan->p_blocks.push_back(j);
        }
    }

    auto block_of = [&](std::size_t j) {
        return std::make_pair(a.block_offset(j), a.block(j).dim());
    };

    // pack the coupling into Z/P sub-matrices
    Eigen::MatrixXd kzz(plan->z_dim, plan->z_dim);
    plan->k_pz.resize(plan->p_dim, plan->z_dim);
    plan->k_zp.resize(plan->z_dim, plan->p_dim);
    Eigen::MatrixXd kpp(plan->p_dim, plan->p_dim);
    for (std::size_t zi = 0; zi < plan->z_blocks.size(); ++zi) {
        auto [zo, zn] = block_of(plan->z_blocks[zi]);
        for (std::size_t zj = 0; zj < plan->z_blocks.size(); ++zj) {
            auto [zo2, zn2] = block_of(plan->z_blocks[zj]);
            kzz.block(plan->z_off[zi], plan->z_off[zj], zn, zn2) =
                plan->k.block(zo, zo2, zn, zn2);
        }
        for (std::size_t pj = 0; pj < plan->p_blocks.size(); ++pj) {
            auto [po, pn] = block_of(plan->p_blocks[pj]);
            plan->k_zp.block(plan->z_off[zi], plan->p_off[pj], zn, pn) =
                plan->k.block(zo, po, zn, pn);
            plan->k_pz.block(plan->p_off[pj], plan->z_off[zi], pn, zn) =
                plan->k.block(po, zo, pn, zn);
        }
    }
    for (std::size_t pi = 0; pi < plan->p_blocks.size(); ++pi) {
        auto [po, pn] = block_of(plan->p_blocks[pi]);
        for (std::size_t pj = 0; pj < plan->p_blocks.size(); ++pj) {
            auto [po2, pn2] = block_of(plan->p_blocks[pj]);
            kpp.block(plan->p_off[pi], plan->p_off[pj], pn, pn2) =
                plan->k.block(po, po2, pn, pn2);
        }
    }

    // eliminate the multiplier (zero-block) rows
    plan->k_hat = kpp;
    if (plan->z_dim > 0) {
        plan->kzz_lu.compute(kzz);
        if (!plan->kzz_lu.isInvertible())
            throw Error(ErrorCode::singular_system,
                        "scheme: the coupling among multiplier blocks is "
                        "singular; the inclusion has no forward solve");
        plan->k_hat -= plan->k_pz * plan->kzz_lu.solve(plan->k_zp);
    }

    // triangular order of the prox blocks under the effective coupling
    std::size_t np = plan->p_blocks.size();
    std::vector<std::vector<std::size_t>> succ(np);
    std::vector<int> indeg(np, 0);
    for (std::size_t pi = 0; pi < np; ++pi) {
        for (std::size_t pj = 0; pj < np; ++pj) {
            if (pi == pj) continue;
            Eigen::Index rn = a.block(plan->p_blocks[pi]).dim();
            Eigen::Index cn = a.block(plan->p_blocks[pj]).dim();
            double mag = plan->k_hat
                             .block(plan->p_off[pi], plan->p_off[pj], rn, cn)
                             .cwiseAbs()
                             .maxCoeff();
            if (mag > pattern_tol) {
                succ[pj].push_back(pi); // row pi needs block pj first
                ++indeg[pi];
            }
        }
    }
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < np; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        std::size_t i = ready.front();
        ready.pop_front();
        plan->order.push_back(i);
        for (std::size_t s : succ[i])
            if (--indeg[s] == 0) ready.push_back(s);
    }
    if (plan->order.size() != np) {
        std::ostringstream msg;
        msg << "scheme: prox blocks are mutually coupled after elimination; "
               "no triangular sweep exists (blocks:";
        for (std::size_t i = 0; i < np; ++i)
            if (indeg[i] > 0)
                msg << " " << plan->p_blocks[i] << " ("
                    << a.block(plan->p_blocks[i]).describe() << ")";
        msg << ")";
        throw Error(ErrorCode::unsupported, msg.str());
    }

    // per-block solver against the effective diagonal metric
    plan->solvers.resize(np);
    for (std::size_t pi = 0; pi < np; ++pi) {
        const ProxFn& fn = a.block(plan->p_blocks[pi]);
        Eigen::Index pn = fn.dim();
        Eigen::MatrixXd w =
            plan->k_hat.block(plan->p_off[pi], plan->p_off[pi], pn, pn);
        Plan::BlockSolve& bs = plan->solvers[pi];

        if (fn.kind() == ProxKind::quadratic ||
            fn.kind() == ProxKind::squared_l2) {
            Eigen::MatrixXd h =
                fn.kind() == ProxKind::quadratic
                    ? fn.hessian()
                    : Eigen::MatrixXd(fn.weight() *
                                      Eigen::MatrixXd::Identity(pn, pn));
            bs.kind = Plan::BlockSolve::Kind::dense;
            bs.lu.compute(h + w);
            bs.analytic_selection = true;
            if (!bs.lu.isInvertible()) {
                std::ostringstream msg;
                msg << "scheme: block " << plan->p_blocks[pi] << " ("
                    << fn.describe() << ") has a singular curvature-plus-"
                    << "metric system";
                throw Error(ErrorCode::singular_system, msg.str());
            }
            continue;
        }

        if (auto c = scalar_of(w, pattern_tol)) {
            bs.kind = Plan::BlockSolve::Kind::prox_scalar;
            bs.scalar = *c;
        } else if (auto d = diagonal_of(w, pattern_tol)) {
            bs.kind = Plan::BlockSolve::Kind::prox_diag;
            bs.diag = *d;
        } else {
            std::ostringstream msg;
            msg << "scheme: block " << plan->p_blocks[pi] << " ("
                << fn.describe() << ") couples through a non-diagonal "
                << "effective metric; no closed-form solve";
            throw Error(ErrorCode::unsupported, msg.str());
        }
    }

    strategy_ = (plan->z_dim == 0 && np == 1 &&
                 plan->solvers[0].kind == Plan::BlockSolve::Kind::prox_scalar)
                    ? SolveStrategy::scalar_prox
                    : SolveStrategy::block_triangular;
    plan_ = std::move(plan);
}

ApplyResult ResolventScheme::apply_T_certified(const Eigen::VectorXd& b) const
{
    const MonotoneBlockOperator& a = *op_;
    Eigen::Index n = a.dim();
    if (b.size() != n)
        throw Error(ErrorCode::dimension_mismatch,
                    "apply_T: point does not match scheme dimension");
    if (!b.allFinite())
        throw Error(ErrorCode::invalid_argument,
                    "apply_T: point has non-finite entries");

    const Plan& plan = *plan_;
    Eigen::VectorXd r = q_.matrix() * b + a.shift();
    Eigen::VectorXd bt(n);
    Eigen::VectorXd sel = Eigen::VectorXd::Zero(n); // dPhi selection

    if (plan.dense) {
        bt = plan.dense_lu.solve(r - a.affine_linear());
        sel = a.affine_hessian() * bt + a.affine_linear();
    } else {
        Eigen::VectorXd r_p(plan.p_dim), r_z(plan.z_dim);
        for (std::size_t pi = 0; pi < plan.p_blocks.size(); ++pi) {
            std::size_t j = plan.p_blocks[pi];
            r_p.segment(plan.p_off[pi], a.block(j).dim()) =
                r.segment(a.block_offset(j), a.block(j).dim());
        }
        for (std::size_t zi = 0; zi < plan.z_blocks.size(); ++zi) {
            std::size_t j = plan.z_blocks[zi];
            r_z.segment(plan.z_off[zi], a.block(j).dim()) =
                r.segment(a.block_offset(j), a.block(j).dim());
        }
        if (plan.z_dim > 0)
            r_p -= plan.k_pz * plan.kzz_lu.solve(r_z);

        Eigen::VectorXd x_p(plan.p_dim);
        std::vector<bool> solved(plan.p_blocks.size(), false);
        for (std::size_t pi : plan.order) {
            std::size_t j = plan.p_blocks[pi];
            const ProxFn& fn = a.block(j);
            Eigen::Index pn = fn.dim();
            Eigen::VectorXd v = r_p.segment(plan.p_off[pi], pn);
            for (std::size_t qi = 0; qi < plan.p_blocks.size(); ++qi) {
                if (!solved[qi] || qi == pi) continue;
                Eigen::Index qn = a.block(plan.p_blocks[qi]).dim();
                v -= plan.k_hat.block(plan.p_off[pi], plan.p_off[qi], pn, qn) *
                     x_p.segment(plan.p_off[qi], qn);
            }
            const Plan::BlockSolve& bs = plan.solvers[pi];
            Eigen::VectorXd x, g;
            switch (bs.kind) {
            case Plan::BlockSolve::Kind::prox_scalar:
                x = fn.prox(v / bs.scalar, 1.0 / bs.scalar);
                g = v - bs.scalar * x;
                break;
            case Plan::BlockSolve::Kind::prox_diag:
                x = fn.prox_diag(v.cwiseQuotient(bs.diag), bs.diag);
                g = v - bs.diag.cwiseProduct(x);
                break;
            case Plan::BlockSolve::Kind::dense:
                if (fn.kind() == ProxKind::quadratic) {
                    x = bs.lu.solve(v - fn.linear());
                    g = fn.hessian() * x + fn.linear();
                } else { // squared_l2
                    x = bs.lu.solve(v + fn.weight() * fn.center());
                    g = fn.weight() * (x - fn.center());
                }
                break;
            }
            x_p.segment(plan.p_off[pi], pn) = x;
            sel.segment(a.block_offset(j), pn) = g;
            solved[pi] = true;
        }

        for (std::size_t pi = 0; pi < plan.p_blocks.size(); ++pi) {
            std::size_t j = plan.p_blocks[pi];
            bt.segment(a.block_offset(j), a.block(j).dim()) =
                x_p.segment(plan.p_off[pi], a.block(j).dim());
        }
        if (plan.z_dim > 0) {
            Eigen::VectorXd x_z =
                plan.kzz_lu.solve(r_z - plan.k_zp * x_p);
            for (std::size_t zi = 0; zi < plan.z_blocks.size(); ++zi) {
                std::size_t j = plan.z_blocks[zi];
                bt.segment(a.block_offset(j), a.block(j).dim()) =
                    x_z.segment(plan.z_off[zi], a.block(j).dim());
            }
        }
    }

    ApplyResult out;
    out.b_tilde = std::move(bt);
    out.selection = sel + a.linear_part() * out.b_tilde - a.shift();
    out.residual =
        (out.selection + q_.matrix() * (out.b_tilde - b)).norm();
    double cap = 1e-8 * (1.0 + b.norm());
    if (!(out.residual <= cap)) {
        std::ostringstream msg;
        msg << "apply_T: inclusion residual " << out.residual
            << " exceeds certificate tolerance " << cap;
        throw Error(ErrorCode::residual_failure, msg.str());
    }
    return out;
}

Eigen::VectorXd ResolventScheme::apply_T(const Eigen::VectorXd& b) const
{
    return apply_T_certified(b).b_tilde;
}

Eigen::VectorXd ResolventScheme::apply_R(const Eigen::VectorXd& b) const
{
    return b - apply_T(b);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd>
ResolventScheme::apply_generalized(const Eigen::VectorXd& b) const
{
    Eigen::VectorXd bt = apply_T(b);
    Eigen::VectorXd next =
        gamma_ ? Eigen::VectorXd(b + *gamma_ * (bt - b))
               : Eigen::VectorXd(b + m_ * (bt - b));
    return {std::move(next), std::move(bt)};
}

Eigen::VectorXd generalized_prox(const ProxFn& h, const Metric& q,
                                 const Eigen::VectorXd& b)
{
    if (b.size() != h.dim() || b.size() != q.dim())
        throw Error(ErrorCode::dimension_mismatch,
                    "generalized_prox: dimension mismatch");
    if (!q.is_spd())
        throw Error(ErrorCode::unsupported,
                    "generalized_prox: metric must be symmetric positive "
                    "definite");

    // a point indicator projects to its point under any metric
    if (h.kind() == ProxKind::box_indicator &&
        (h.upper() - h.lower()).cwiseAbs().maxCoeff() == 0.0)
        return h.lower();

    if (h.kind() == ProxKind::zero) return b;

    double tol = 1e-12 * (1.0 + q.op_norm());
    if (auto c = scalar_of(q.matrix(), tol)) return h.prox(b, 1.0 / *c);
    if (h.is_separable()) {
        if (auto d = diagonal_of(q.matrix(), tol)) return h.prox_diag(b, *d);
    }
    if (h.kind() == ProxKind::quadratic) {
        Eigen::MatrixXd sys = h.hessian() + q.matrix();
        return sys.ldlt().solve(q.matrix() * b - h.linear());
    }
    if (h.kind() == ProxKind::squared_l2) {
        Eigen::MatrixXd sys =
            h.weight() * Eigen::MatrixXd::Identity(h.dim(), h.dim()) +
            q.matrix();
        return sys.ldlt().solve(q.matrix() * b + h.weight() * h.center());
    }
    std::ostringstream msg;
    msg << "generalized_prox: unsupported metric-prox combination ("
        << to_string(h.kind()) << " with a non-diagonal metric)";
    throw Error(ErrorCode::unsupported, msg.str());
}

std::pair<Eigen::VectorXd, Eigen::VectorXd>
moreau_decompose(const ProxFn& h, const Metric& q, const Eigen::VectorXd& b)
{
    if (!q.is_spd())
        throw Error(ErrorCode::unsupported,
                    "moreau_decompose: metric must be symmetric positive "
                    "definite");
    if (!h.has_conjugate())
        throw Error(ErrorCode::unsupported,
                    "moreau_decompose: no conjugate machinery for " +
                        h.describe());
    Eigen::VectorXd p = generalized_prox(h, q, b);
    Eigen::MatrixXd qinv_m = q.inv_sqrt() * q.inv_sqrt();
    Metric qinv = Metric::classify(qinv_m);
    Eigen::VectorXd dual =
        generalized_prox(h.conjugate(), qinv, q.matrix() * b);
    return {std::move(p), qinv_m * dual};
}

std::vector<PropertyReport>
check_partial_nonexpansive(const ResolventScheme& scheme, int samples,
                           std::uint64_t seed)
{
    if (samples < 1)
        throw Error(ErrorCode::invalid_argument,
                    "check_partial_nonexpansive: samples must be >= 1");
    std::mt19937_64 rng = make_rng(seed);
    Eigen::Index n = scheme.dim();
    const Eigen::MatrixXd& qm = scheme.metric().matrix();
    double mu = scheme.op().mu();
    bool strong = mu > 0.0 &&
                  scheme.metric().definiteness() == Definiteness::pd;
    double strong_factor =
        strong ? 1.0 + mu / scheme.metric().op_norm() : 1.0;

    PropertyReport rt{"partly_nonexpansive_T", samples, 0.0, 0, true};
    PropertyReport rr{"partly_nonexpansive_R_transposed", samples, 0.0, 0,
                      true};
    PropertyReport rs{"cocoercive_strong_T", samples, 0.0, 0, true};
    double wt = std::numeric_limits<double>::infinity();
    double wr = wt, ws = wt;

    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd b1 = gaussian_vector(n, rng);
        Eigen::VectorXd b2 = gaussian_vector(n, rng);
        Eigen::VectorXd t1 = scheme.apply_T(b1);
        Eigen::VectorXd t2 = scheme.apply_T(b2);
        Eigen::VectorXd d = b1 - b2;
        Eigen::VectorXd td = t1 - t2;
        Eigen::VectorXd rd = d - td;

        double inner_t = (qm * d).dot(td);
        double tt = (qm * td).dot(td);
        wt = std::min(wt, inner_t - tt);

        double inner_r = (qm.transpose() * d).dot(rd);
        double rrq = (qm.transpose() * rd).dot(rd);
        wr = std::min(wr, inner_r - rrq);

        if (strong) ws = std::min(ws, inner_t - strong_factor * tt);
    }
    rt.worst_margin = wt;
    rt.violations = wt < -1e-8 ? 1 : 0;
    rt.pass = rt.violations == 0;
    rr.worst_margin = wr;
    rr.violations = wr < -1e-8 ? 1 : 0;
    rr.pass = rr.violations == 0;

    std::vector<PropertyReport> out{rt, rr};
    if (strong) {
        rs.worst_margin = ws;
        rs.violations = ws < -1e-8 ? 1 : 0;
        rs.pass = rs.violations == 0;
        out.push_back(rs);
    }
    return out;
}

PropertyReport check_averagedness(const ResolventScheme& scheme, int samples,
                                  std::uint64_t seed)
{
    if (!scheme.scalar_correction())
        throw Error(ErrorCode::unsupported,
                    "check_averagedness: requires a scalar relaxation");
    if (!scheme.metric().is_symmetric_psd())
        throw Error(ErrorCode::unsupported,
                    "check_averagedness: requires a symmetric PSD metric");
    double gamma = scheme.gamma();
    if (!(gamma > 0.0 && gamma < 2.0))
        throw Error(ErrorCode::invalid_argument,
                    "check_averagedness: relaxation must lie in (0, 2)");

    double mu = scheme.op().mu();
    double qn = scheme.metric().op_norm();
    double xi = 1.0, alpha = gamma / 2.0;
    if (mu > 0.0 && gamma < 1.0 + qn / (2.0 * mu + qn)) {
        xi = qn / (2.0 * mu + qn);
        alpha = gamma * (2.0 * mu + qn) / (2.0 * mu + 2.0 * qn);
    }

    std::mt19937_64 rng = make_rng(seed);
    Eigen::Index n = scheme.dim();
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd b1 = gaussian_vector(n, rng);
        Eigen::VectorXd b2 = gaussian_vector(n, rng);
        // K = I + (gamma/alpha) (T - I)
        Eigen::VectorXd k1 = b1 + (gamma / alpha) * (scheme.apply_T(b1) - b1);
        Eigen::VectorXd k2 = b2 + (gamma / alpha) * (scheme.apply_T(b2) - b2);
        double lhs = q_norm(k1 - k2, scheme.metric());
        double rhs = xi * q_norm(b1 - b2, scheme.metric());
        worst = std::min(worst, rhs - lhs);
    }
    PropertyReport rep{"averagedness_lipschitz", samples, worst, 0, true};
    rep.violations = worst < -1e-8 ? 1 : 0;
    rep.pass = rep.violations == 0;
    return rep;
}

} // namespace mr
