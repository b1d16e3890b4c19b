#include "splitting.hpp"

#include <cmath>
#include <sstream>

#include "random.hpp"

namespace mr {

namespace {

Eigen::MatrixXd zeros(Eigen::Index r, Eigen::Index c)
{
    return Eigen::MatrixXd::Zero(r, c);
}

Eigen::MatrixXd eye(Eigen::Index n)
{
    return Eigen::MatrixXd::Identity(n, n);
}

[[noreturn]] void dim_error(const std::string& what)
{
    throw Error(ErrorCode::dimension_mismatch, what);
}

double operator_norm_sq(const Eigen::MatrixXd& a)
{
    double n = operator_norm(a);
    return n * n;
}

} // namespace

const char* to_string(ProblemKind k)
{
    switch (k) {
    case ProblemKind::two_block_constrained: return "two_block_constrained";
    case ProblemKind::composite: return "composite";
    case ProblemKind::linear_equality: return "linear_equality";
    }
    return "unknown";
}

const char* to_string(AlgorithmKind k)
{
    switch (k) {
    case AlgorithmKind::relaxed_admm: return "relaxed_admm";
    case AlgorithmKind::proximal_admm: return "proximal_admm";
    case AlgorithmKind::pdhg_mp: return "pdhg_mp";
    case AlgorithmKind::pdhg_mu: return "pdhg_mu";
    case AlgorithmKind::alm: return "alm";
    case AlgorithmKind::linearized_alm: return "linearized_alm";
    case AlgorithmKind::linearized_bregman: return "linearized_bregman";
    }
    return "unknown";
}

std::vector<AlgorithmKind> all_algorithms()
{
    return {AlgorithmKind::relaxed_admm,   AlgorithmKind::proximal_admm,
            AlgorithmKind::pdhg_mp,        AlgorithmKind::pdhg_mu,
            AlgorithmKind::alm,            AlgorithmKind::linearized_alm,
            AlgorithmKind::linearized_bregman};
}

std::optional<AlgorithmKind> algorithm_from_name(const std::string& name)
{
    for (AlgorithmKind k : all_algorithms())
        if (name == to_string(k)) return k;
    return std::nullopt;
}

SplittingProblem SplittingProblem::two_block(ProxFn f, ProxFn g,
                                             Eigen::MatrixXd a,
                                             Eigen::MatrixXd b,
                                             Eigen::VectorXd c)
{
    if (a.cols() != f.dim())
        dim_error("two_block: A has " + std::to_string(a.cols()) +
                  " columns but f.dim = " + std::to_string(f.dim()));
    if (b.cols() != g.dim())
        dim_error("two_block: B has " + std::to_string(b.cols()) +
                  " columns but g.dim = " + std::to_string(g.dim()));
    if (a.rows() != b.rows() || a.rows() != c.size())
        dim_error("two_block: row counts of A, B and c disagree");
    SplittingProblem p;
    p.kind = ProblemKind::two_block_constrained;
    p.f = std::move(f);
    p.g = std::move(g);
    p.a_mat = std::move(a);
    p.b_mat = std::move(b);
    p.rhs = std::move(c);
    return p;
}

SplittingProblem SplittingProblem::composite(ProxFn f, ProxFn g,
                                             Eigen::MatrixXd a)
{
    if (a.cols() != f.dim())
        dim_error("composite: A has " + std::to_string(a.cols()) +
                  " columns but f.dim = " + std::to_string(f.dim()));
    if (a.rows() != g.dim())
        dim_error("composite: A has " + std::to_string(a.rows()) +
                  " rows but g.dim = " + std::to_string(g.dim()));
    SplittingProblem p;
    p.kind = ProblemKind::composite;
    p.f = std::move(f);
    p.g = std::move(g);
    p.a_mat = std::move(a);
    return p;
}

SplittingProblem SplittingProblem::linear_equality(ProxFn h, Eigen::MatrixXd a,
                                                   Eigen::VectorXd c)
{
    if (a.cols() != h.dim())
        dim_error("linear_equality: A has " + std::to_string(a.cols()) +
                  " columns but h.dim = " + std::to_string(h.dim()));
    if (a.rows() != c.size())
        dim_error("linear_equality: A has " + std::to_string(a.rows()) +
                  " rows but c.size = " + std::to_string(c.size()));
    SplittingProblem p;
    p.kind = ProblemKind::linear_equality;
    p.h = std::move(h);
    p.a_mat = std::move(a);
    p.rhs = std::move(c);
    return p;
}

Eigen::Index SplittingProblem::primal_dim() const
{
    switch (kind) {
    case ProblemKind::two_block_constrained:
    case ProblemKind::composite: return f->dim();
    case ProblemKind::linear_equality: return h->dim();
    }
    return 0;
}

/* ---- operator assembly -------------------------------------------------- */

namespace {

MonotoneBlockOperator two_block_operator(const SplittingProblem& p)
{
    Eigen::Index n = p.f->dim(), l = p.g->dim(), m = p.rhs.size();
    Eigen::MatrixXd coup = zeros(n + l + m, n + l + m);
    coup.block(0, n + l, n, m) = -p.a_mat.transpose();
    coup.block(n, n + l, l, m) = -p.b_mat.transpose();
    coup.block(n + l, 0, m, n) = p.a_mat;
    coup.block(n + l, n, m, l) = p.b_mat;
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(n + l + m);
    shift.tail(m) = p.rhs;
    return MonotoneBlockOperator({*p.f, *p.g, ProxFn::zero(m)},
                                 std::move(coup), std::move(shift), 0.0);
}

MonotoneBlockOperator composite_operator(const SplittingProblem& p)
{
    ProxFn g_star = p.g->conjugate();
    Eigen::Index l = g_star.dim(), n = p.f->dim();
    Eigen::MatrixXd coup = zeros(l + n, l + n);
    coup.block(0, l, l, n) = -p.a_mat;
    coup.block(l, 0, n, l) = p.a_mat.transpose();
    double mu = std::min(g_star.strong_convexity_modulus(),
                         p.f->strong_convexity_modulus());
    return MonotoneBlockOperator({std::move(g_star), *p.f}, std::move(coup),
                                 Eigen::VectorXd::Zero(l + n), mu);
}

MonotoneBlockOperator equality_operator(const SplittingProblem& p)
{
    Eigen::Index n = p.h->dim(), m = p.rhs.size();
    Eigen::MatrixXd coup = zeros(n + m, n + m);
    coup.block(0, n, n, m) = -p.a_mat.transpose();
    coup.block(n, 0, m, n) = p.a_mat;
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(n + m);
    shift.tail(m) = p.rhs;
    return MonotoneBlockOperator({*p.h, ProxFn::zero(m)}, std::move(coup),
                                 std::move(shift), 0.0);
}

void require_kind(const SplittingProblem& p, ProblemKind kind,
                  const char* builder)
{
    if (p.kind != kind) {
        std::ostringstream msg;
        msg << builder << ": expects a " << to_string(kind)
            << " problem, got " << to_string(p.kind);
        throw Error(ErrorCode::invalid_argument, msg.str());
    }
}

void require_positive(double v, const char* name, const char* builder)
{
    if (!(v > 0.0)) {
        std::ostringstream msg;
        msg << builder << ": parameter " << name << " must be positive, got "
            << v;
        throw Error(ErrorCode::invalid_argument, msg.str());
    }
}

} // namespace

/* ---- builders ------------------------------------------------------------ */

ResolventScheme build_relaxed_admm(const SplittingProblem& p, double tau,
                                   double gamma)
{
    require_kind(p, ProblemKind::two_block_constrained, "relaxed_admm");
    require_positive(tau, "tau", "relaxed_admm");
    if (!(gamma > 0.0 && gamma < 2.0))
        throw Error(ErrorCode::invalid_argument,
                    "relaxed_admm: gamma must lie in (0, 2), got " +
                        std::to_string(gamma));
    Eigen::Index n = p.f->dim(), l = p.g->dim(), m = p.rhs.size();
    const Eigen::MatrixXd& bm = p.b_mat;

    Eigen::MatrixXd q = zeros(n + l + m, n + l + m);
    q.block(n, n, l, l) = tau * bm.transpose() * bm;
    q.block(n, n + l, l, m) = (1.0 - gamma) * bm.transpose();
    q.block(n + l, n, m, l) = -bm;
    q.block(n + l, n + l, m, m) = (1.0 / tau) * eye(m);

    Eigen::MatrixXd corr = eye(n + l + m);
    corr.block(n + l, n, m, l) = -tau * bm;
    corr.block(n + l, n + l, m, m) = gamma * eye(m);

    return ResolventScheme::make_generalized(two_block_operator(p),
                                             Metric::classify(q),
                                             std::move(corr));
}

ResolventScheme build_proximal_admm(const SplittingProblem& p, double tau,
                                    const Eigen::MatrixXd& p1,
                                    const Eigen::MatrixXd& p2)
{
    require_kind(p, ProblemKind::two_block_constrained, "proximal_admm");
    require_positive(tau, "tau", "proximal_admm");
    Eigen::Index n = p.f->dim(), l = p.g->dim(), m = p.rhs.size();
    if (p1.rows() != n || p1.cols() != n)
        dim_error("proximal_admm: P1 must be " + std::to_string(n) + "x" +
                  std::to_string(n));
    if (p2.rows() != l || p2.cols() != l)
        dim_error("proximal_admm: P2 must be " + std::to_string(l) + "x" +
                  std::to_string(l));
    for (const auto* w : {&p1, &p2}) {
        Metric cls = Metric::classify(*w);
        if (!cls.is_symmetric() ||
            cls.definiteness() == Definiteness::indefinite)
            throw Error(ErrorCode::invalid_argument,
                        "proximal_admm: proximal weights must be symmetric "
                        "positive semidefinite");
    }
    const Eigen::MatrixXd& bm = p.b_mat;

    Eigen::MatrixXd q = zeros(n + l + m, n + l + m);
    q.block(0, 0, n, n) = p1;
    q.block(n, n, l, l) = p2 + tau * bm.transpose() * bm;
    q.block(n + l, n, m, l) = -bm;
    q.block(n + l, n + l, m, m) = (1.0 / tau) * eye(m);

    Eigen::MatrixXd corr = eye(n + l + m);
    corr.block(n + l, n, m, l) = -tau * bm;

    return ResolventScheme::make_generalized(two_block_operator(p),
                                             Metric::classify(q),
                                             std::move(corr));
}

namespace {

Eigen::MatrixXd pdhg_metric(const SplittingProblem& p, double sigma,
                            double tau, double sign, const char* builder)
{
    require_positive(sigma, "sigma", builder);
    require_positive(tau, "tau", builder);
    double na2 = operator_norm_sq(p.a_mat);
    if (!(sigma * tau * na2 < 1.0)) {
        std::ostringstream msg;
        msg << builder << ": metric not PD; requires sigma*tau*||A||^2 < 1, "
            << "got " << sigma * tau * na2;
        throw Error(ErrorCode::invalid_argument, msg.str());
    }
    Eigen::Index l = p.a_mat.rows(), n = p.a_mat.cols();
    Eigen::MatrixXd q = zeros(l + n, l + n);
    q.block(0, 0, l, l) = (1.0 / sigma) * eye(l);
    q.block(0, l, l, n) = sign * p.a_mat;
    q.block(l, 0, n, l) = sign * p.a_mat.transpose();
    q.block(l, l, n, n) = (1.0 / tau) * eye(n);
    return q;
}

} // namespace

ResolventScheme build_pdhg_mp(const SplittingProblem& p, double sigma,
                              double tau)
{
    require_kind(p, ProblemKind::composite, "pdhg_mp");
    Eigen::MatrixXd q = pdhg_metric(p, sigma, tau, +1.0, "pdhg_mp");
    return ResolventScheme::make(composite_operator(p), Metric::classify(q));
}

ResolventScheme build_pdhg_mu(const SplittingProblem& p, double sigma,
                              double tau)
{
    require_kind(p, ProblemKind::composite, "pdhg_mu");
    Eigen::MatrixXd q = pdhg_metric(p, sigma, tau, -1.0, "pdhg_mu");
    return ResolventScheme::make(composite_operator(p), Metric::classify(q));
}

ResolventScheme build_alm(const SplittingProblem& p, double tau)
{
    require_kind(p, ProblemKind::linear_equality, "alm");
    require_positive(tau, "tau", "alm");
    Eigen::Index n = p.h->dim(), m = p.rhs.size();
    Eigen::MatrixXd q = zeros(n + m, n + m);
    q.block(n, n, m, m) = (1.0 / tau) * eye(m);
    return ResolventScheme::make(equality_operator(p), Metric::classify(q));
}

ResolventScheme build_linearized_alm(const SplittingProblem& p, double tau,
                                     double rho)
{
    require_kind(p, ProblemKind::linear_equality, "linearized_alm");
    require_positive(tau, "tau", "linearized_alm");
    require_positive(rho, "rho", "linearized_alm");
    double na2 = operator_norm_sq(p.a_mat);
    if (!(rho > tau * na2 + 1e-10 * std::max(1.0, tau * na2))) {
        std::ostringstream msg;
        msg << "linearized_alm: metric not PD; requires rho > tau*||A^T A|| "
            << "(rho = " << rho << ", tau*||A^T A|| = " << tau * na2 << ")";
        throw Error(ErrorCode::invalid_argument, msg.str());
    }
    Eigen::Index n = p.h->dim(), m = p.rhs.size();
    Eigen::MatrixXd q = zeros(n + m, n + m);
    q.block(0, 0, n, n) =
        rho * eye(n) - tau * p.a_mat.transpose() * p.a_mat;
    q.block(n, n, m, m) = (1.0 / tau) * eye(m);
    return ResolventScheme::make(equality_operator(p), Metric::classify(q));
}

ResolventScheme build_linearized_bregman(const SplittingProblem& p, double tau,
                                         double rho)
{
    require_kind(p, ProblemKind::linear_equality, "linearized_bregman");
    require_positive(tau, "tau", "linearized_bregman");
    require_positive(rho, "rho", "linearized_bregman");
    double na2 = operator_norm_sq(p.a_mat);
    if (1.0 / rho + 1e-12 * (1.0 + na2) < na2) {
        std::ostringstream msg;
        msg << "linearized_bregman: operator not certified monotone; "
            << "requires 1/rho >= ||A^T A|| (1/rho = " << 1.0 / rho
            << ", ||A^T A|| = " << na2 << ")";
        throw Error(ErrorCode::invalid_argument, msg.str());
    }
    Eigen::Index n = p.h->dim(), m = p.rhs.size();

    Eigen::MatrixXd coup = zeros(n + m, n + m);
    coup.block(0, 0, n, n) =
        (1.0 / rho) * eye(n) - p.a_mat.transpose() * p.a_mat;
    coup.block(0, n, n, m) = -p.a_mat.transpose();
    coup.block(n, 0, m, n) = p.a_mat;
    Eigen::VectorXd shift(n + m);
    shift.head(n) = -p.a_mat.transpose() * p.rhs;
    shift.tail(m) = p.rhs;
    MonotoneBlockOperator op({p.h->scaled(tau), ProxFn::zero(m)},
                             std::move(coup), std::move(shift), 0.0);

    Eigen::MatrixXd q = zeros(n + m, n + m);
    q.block(n, n, m, m) = eye(m);
    return ResolventScheme::make(std::move(op), Metric::classify(q));
}

ResolventScheme build_algorithm(AlgorithmKind alg, const SplittingProblem& p,
                                const AlgoParams& params)
{
    switch (alg) {
    case AlgorithmKind::relaxed_admm:
        return build_relaxed_admm(p, params.tau, params.gamma);
    case AlgorithmKind::proximal_admm: {
        Eigen::Index n = p.kind == ProblemKind::two_block_constrained
                             ? p.f->dim()
                             : 0;
        Eigen::Index l = p.kind == ProblemKind::two_block_constrained
                             ? p.g->dim()
                             : 0;
        Eigen::MatrixXd p1 = params.p1 ? *params.p1 : zeros(n, n);
        Eigen::MatrixXd p2 = params.p2 ? *params.p2 : zeros(l, l);
        return build_proximal_admm(p, params.tau, p1, p2);
    }
    case AlgorithmKind::pdhg_mp:
        return build_pdhg_mp(p, params.sigma, params.tau);
    case AlgorithmKind::pdhg_mu:
        return build_pdhg_mu(p, params.sigma, params.tau);
    case AlgorithmKind::alm:
        return build_alm(p, params.tau);
    case AlgorithmKind::linearized_alm:
        return build_linearized_alm(p, params.tau, params.rho);
    case AlgorithmKind::linearized_bregman:
        return build_linearized_bregman(p, params.tau, params.rho);
    }
    throw Error(ErrorCode::internal, "build_algorithm: unhandled kind");
}

/* ---- native twins ---------------------------------------------------------
 * The subproblem solver below belongs to the native side only; the
 * resolvent machinery never calls it. */

namespace {

/* argmin_z psi(z) + (tau/2)||M z - v||^2 + 0.5||z - z0||_P^2 */
class NativeProxSolve {
public:
    NativeProxSolve(ProxFn psi, double tau, Eigen::MatrixXd m,
                    Eigen::MatrixXd p)
        : psi_(std::move(psi)), tau_(tau), m_(std::move(m)), p_(std::move(p))
    {
        Eigen::Index n = psi_.dim();
        Eigen::MatrixXd w = tau_ * m_.transpose() * m_ + p_;
        if (psi_.kind() == ProxKind::quadratic) {
            mode_ = Mode::dense;
            lu_.compute(psi_.hessian() + w);
            if (!lu_.isInvertible())
                throw Error(ErrorCode::singular_system,
                            "native subproblem: singular system");
            return;
        }
        if (psi_.kind() == ProxKind::squared_l2) {
            mode_ = Mode::dense;
            lu_.compute(psi_.weight() * eye(n) + w);
            if (!lu_.isInvertible())
                throw Error(ErrorCode::singular_system,
                            "native subproblem: singular system");
            return;
        }
        double tol = 1e-12 * (1.0 + w.cwiseAbs().maxCoeff());
        Eigen::MatrixXd off = w;
        off.diagonal().setZero();
        double c = w.trace() / static_cast<double>(n);
        if (off.cwiseAbs().maxCoeff() <= tol &&
            (w - c * eye(n)).cwiseAbs().maxCoeff() <= tol && c > tol) {
            mode_ = Mode::scalar;
            scalar_ = c;
            return;
        }
        if (off.cwiseAbs().maxCoeff() <= tol && w.diagonal().minCoeff() > tol &&
            psi_.is_separable()) {
            mode_ = Mode::diag;
            diag_ = w.diagonal();
            return;
        }
        throw Error(ErrorCode::unsupported,
                    "native subproblem for " + psi_.describe() +
                        " has no closed-form solve under this coupling");
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& v,
                          const Eigen::VectorXd& z0) const
    {
        Eigen::VectorXd w = tau_ * (m_.transpose() * v);
        if (p_.size() > 0 && p_.cwiseAbs().maxCoeff() > 0.0) w += p_ * z0;
        switch (mode_) {
        case Mode::dense:
            if (psi_.kind() == ProxKind::quadratic)
                return lu_.solve(w - psi_.linear());
            return lu_.solve(w + psi_.weight() * psi_.center());
        case Mode::scalar:
            return psi_.prox(w / scalar_, 1.0 / scalar_);
        case Mode::diag:
            return psi_.prox_diag(w.cwiseQuotient(diag_), diag_);
        }
        throw Error(ErrorCode::internal, "native subproblem: unhandled mode");
    }

private:
    enum class Mode { dense, scalar, diag };
    ProxFn psi_;
    double tau_;
    Eigen::MatrixXd m_, p_;
    Mode mode_ = Mode::dense;
    Eigen::FullPivLU<Eigen::MatrixXd> lu_;
    double scalar_ = 0.0;
    Eigen::VectorXd diag_;
};

NativeTwin native_admm_family(const SplittingProblem& p, double tau,
                              double gamma, bool proximal,
                              const Eigen::MatrixXd& p1,
                              const Eigen::MatrixXd& p2)
{
    Eigen::Index n = p.f->dim(), l = p.g->dim(), m = p.rhs.size();
    auto f_solve = std::make_shared<NativeProxSolve>(
        *p.f, tau, p.a_mat, proximal ? p1 : zeros(n, n));
    auto g_solve = std::make_shared<NativeProxSolve>(
        *p.g, tau, p.b_mat, proximal ? p2 : zeros(l, l));
    Eigen::MatrixXd a = p.a_mat, b = p.b_mat;
    Eigen::VectorXd c = p.rhs;

    NativeTwin::Step step;
    if (!proximal) {
        step = [=](const NativeState& st) {
            NativeState out;
            Eigen::VectorXd w1 = c + st.s / tau - b * st.u;
            out.x = f_solve->solve(w1, st.x);
            Eigen::VectorXd r = a * out.x + b * st.u - c;
            Eigen::VectorXd v = b * st.u - gamma * r + st.s / tau;
            out.u = g_solve->solve(v, st.u);
            out.s = st.s - tau * (b * (out.u - st.u)) - tau * gamma * r;
            return out;
        };
    } else {
        step = [=](const NativeState& st) {
            NativeState out;
            Eigen::VectorXd w1 = c + st.s / tau - b * st.u;
            out.x = f_solve->solve(w1, st.x);
            Eigen::VectorXd v2 = c + st.s / tau - a * out.x;
            out.u = g_solve->solve(v2, st.u);
            out.s = st.s - tau * (a * out.x + b * out.u - c);
            return out;
        };
    }
    NativeTwin::Pack pack = [n, l, m](const NativeState& st) {
        Eigen::VectorXd b0(n + l + m);
        b0 << st.x, st.u, st.s;
        return b0;
    };
    NativeTwin::Seed seed = [n, l, m](const Eigen::VectorXd& b0) {
        NativeState st;
        st.x = b0.head(n);
        st.u = b0.segment(n, l);
        st.s = b0.tail(m);
        return st;
    };
    return NativeTwin(proximal ? AlgorithmKind::proximal_admm
                               : AlgorithmKind::relaxed_admm,
                      std::move(step), std::move(pack), std::move(seed));
}

NativeTwin native_pdhg(const SplittingProblem& p, double sigma, double tau,
                       bool lagged)
{
    ProxFn f = *p.f;
    ProxFn g_star = p.g->conjugate();
    Eigen::MatrixXd a = p.a_mat;
    Eigen::Index la = a.rows(), n = a.cols();

    if (!lagged) {
        NativeTwin::Step step = [=](const NativeState& st) {
            NativeState out;
            out.s = g_star.prox(st.s + sigma * (a * st.x), sigma);
            out.x = f.prox(st.x - tau * (a.transpose() * (2.0 * out.s - st.s)),
                           tau);
            return out;
        };
        NativeTwin::Pack pack = [la, n](const NativeState& st) {
            Eigen::VectorXd b0(la + n);
            b0 << st.s, st.x;
            return b0;
        };
        NativeTwin::Seed seed = [la, n](const Eigen::VectorXd& b0) {
            NativeState st;
            st.s = b0.head(la);
            st.x = b0.tail(n);
            return st;
        };
        return NativeTwin(AlgorithmKind::pdhg_mp, std::move(step),
                          std::move(pack), std::move(seed));
    }

    NativeTwin::Step step = [=](const NativeState& st) {
        NativeState out;
        out.s = g_star.prox(st.s + sigma * (a * (2.0 * st.x - st.x_prev)),
                            sigma);
        out.x = f.prox(st.x - tau * (a.transpose() * out.s), tau);
        out.x_prev = st.x;
        return out;
    };
    // the scheme state is (s^k, x^{k-1})
    NativeTwin::Pack pack = [la, n](const NativeState& st) {
        Eigen::VectorXd b0(la + n);
        b0 << st.s, st.x_prev;
        return b0;
    };
    // priming primal step turns the lagged seed into x^0
    NativeTwin::Seed seed = [=](const Eigen::VectorXd& b0) {
        NativeState st;
        st.s = b0.head(la);
        st.x_prev = b0.tail(n);
        st.x = f.prox(st.x_prev - tau * (a.transpose() * st.s), tau);
        return st;
    };
    return NativeTwin(AlgorithmKind::pdhg_mu, std::move(step), std::move(pack),
                      std::move(seed));
}

NativeTwin native_alm(const SplittingProblem& p, double tau)
{
    Eigen::Index n = p.h->dim(), m = p.rhs.size();
    auto x_solve =
        std::make_shared<NativeProxSolve>(*p.h, tau, p.a_mat, zeros(n, n));
    Eigen::MatrixXd a = p.a_mat;
    Eigen::VectorXd c = p.rhs;
    NativeTwin::Step step = [=](const NativeState& st) {
        NativeState out;
        out.x = x_solve->solve(c + st.s / tau, st.x);
        out.s = st.s - tau * (a * out.x - c);
        return out;
    };
    NativeTwin::Pack pack = [n, m](const NativeState& st) {
        Eigen::VectorXd b0(n + m);
        b0 << st.x, st.s;
        return b0;
    };
    NativeTwin::Seed seed = [n, m](const Eigen::VectorXd& b0) {
        NativeState st;
        st.x = b0.head(n);
        st.s = b0.tail(m);
        return st;
    };
    return NativeTwin(AlgorithmKind::alm, std::move(step), std::move(pack),
                      std::move(seed));
}

NativeTwin native_linearized_alm(const SplittingProblem& p, double tau,
                                 double rho)
{
    Eigen::Index n = p.h->dim(), m = p.rhs.size();
    ProxFn h = *p.h;
    Eigen::MatrixXd a = p.a_mat;
    Eigen::VectorXd c = p.rhs;
    NativeTwin::Step step = [=](const NativeState& st) {
        NativeState out;
        Eigen::VectorXd grad = a.transpose() * (tau * (a * st.x - c) - st.s);
        out.x = h.prox(st.x - grad / rho, 1.0 / rho);
        out.s = st.s - tau * (a * out.x - c);
        return out;
    };
    NativeTwin::Pack pack = [n, m](const NativeState& st) {
        Eigen::VectorXd b0(n + m);
        b0 << st.x, st.s;
        return b0;
    };
    NativeTwin::Seed seed = [n, m](const Eigen::VectorXd& b0) {
        NativeState st;
        st.x = b0.head(n);
        st.s = b0.tail(m);
        return st;
    };
    return NativeTwin(AlgorithmKind::linearized_alm, std::move(step),
                      std::move(pack), std::move(seed));
}

NativeTwin native_linearized_bregman(const SplittingProblem& p, double tau,
                                     double rho)
{
    Eigen::Index n = p.h->dim(), m = p.rhs.size();
    ProxFn h_scaled = p.h->scaled(rho * tau);
    Eigen::MatrixXd a = p.a_mat;
    Eigen::VectorXd c = p.rhs;
    NativeTwin::Step step = [=](const NativeState& st) {
        NativeState out;
        out.x = h_scaled.prox(rho * (a.transpose() * st.s), 1.0);
        out.s = st.s - (a * out.x - c);
        return out;
    };
    NativeTwin::Pack pack = [n, m](const NativeState& st) {
        Eigen::VectorXd b0(n + m);
        b0 << st.x, st.s;
        return b0;
    };
    NativeTwin::Seed seed = [n, m](const Eigen::VectorXd& b0) {
        NativeState st;
        st.x = b0.head(n);
        st.s = b0.tail(m);
        return st;
    };
    return NativeTwin(AlgorithmKind::linearized_bregman, std::move(step),
                      std::move(pack), std::move(seed));
}

} // namespace

NativeTwin make_native(AlgorithmKind alg, const SplittingProblem& p,
                       const AlgoParams& params)
{
    switch (alg) {
    case AlgorithmKind::relaxed_admm:
        require_kind(p, ProblemKind::two_block_constrained, "relaxed_admm");
        return native_admm_family(p, params.tau, params.gamma, false,
                                  Eigen::MatrixXd(), Eigen::MatrixXd());
    case AlgorithmKind::proximal_admm: {
        require_kind(p, ProblemKind::two_block_constrained, "proximal_admm");
        Eigen::MatrixXd p1 =
            params.p1 ? *params.p1 : zeros(p.f->dim(), p.f->dim());
        Eigen::MatrixXd p2 =
            params.p2 ? *params.p2 : zeros(p.g->dim(), p.g->dim());
        return native_admm_family(p, params.tau, 1.0, true, p1, p2);
    }
    case AlgorithmKind::pdhg_mp:
        require_kind(p, ProblemKind::composite, "pdhg_mp");
        return native_pdhg(p, params.sigma, params.tau, false);
    case AlgorithmKind::pdhg_mu:
        require_kind(p, ProblemKind::composite, "pdhg_mu");
        return native_pdhg(p, params.sigma, params.tau, true);
    case AlgorithmKind::alm:
        require_kind(p, ProblemKind::linear_equality, "alm");
        return native_alm(p, params.tau);
    case AlgorithmKind::linearized_alm:
        require_kind(p, ProblemKind::linear_equality, "linearized_alm");
        return native_linearized_alm(p, params.tau, params.rho);
    case AlgorithmKind::linearized_bregman:
        require_kind(p, ProblemKind::linear_equality, "linearized_bregman");
        return native_linearized_bregman(p, params.tau, params.rho);
    }
    throw Error(ErrorCode::internal, "make_native: unhandled kind");
}

double twin_max_drift(const ResolventScheme& scheme, const NativeTwin& twin,
                      const Eigen::VectorXd& b0, int steps)
{
    if (b0.size() != scheme.dim())
        dim_error("twin_max_drift: starting point does not match scheme");
    Eigen::VectorXd b = b0;
    NativeState st = twin.seed_state(b0);
    double worst = 0.0;
    for (int k = 0; k < steps; ++k) {
        b = scheme.apply_generalized(b).first;
        st = twin.step(st);
        Eigen::VectorXd nb = twin.pack(st);
        worst = std::max(worst, (b - nb).norm() / (1.0 + nb.norm()));
    }
    return worst;
}

KktReport kkt_residual(AlgorithmKind alg, const SplittingProblem& p,
                       const AlgoParams& params, const Eigen::VectorXd& point,
                       double tol)
{
    KktReport rep;
    auto prox_residual = [](const ProxFn& fn, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& target) {
        // target in dfn(x) iff x = prox_fn(x + target)
        return (x - fn.prox(x + target, 1.0)).norm();
    };

    switch (p.kind) {
    case ProblemKind::two_block_constrained: {
        Eigen::Index n = p.f->dim(), l = p.g->dim(), m = p.rhs.size();
        if (point.size() != n + l + m)
            dim_error("kkt_residual: point does not match (x, u, s) layout");
        Eigen::VectorXd x = point.head(n), u = point.segment(n, l),
                        s = point.tail(m);
        rep.feasibility = (p.a_mat * x + p.b_mat * u - p.rhs).norm();
        double st_f = prox_residual(*p.f, x, p.a_mat.transpose() * s);
        double st_g = prox_residual(*p.g, u, p.b_mat.transpose() * s);
        rep.stationarity = std::max(st_f, st_g);
        break;
    }
    case ProblemKind::composite: {
        Eigen::Index la = p.a_mat.rows(), n = p.a_mat.cols();
        if (point.size() != la + n)
            dim_error("kkt_residual: point does not match (s, x) layout");
        Eigen::VectorXd s = point.head(la), x = point.tail(n);
        rep.feasibility = 0.0;
        double st_f = prox_residual(*p.f, x, -(p.a_mat.transpose() * s));
        double st_g = prox_residual(p.g->conjugate(), s, p.a_mat * x);
        rep.stationarity = std::max(st_f, st_g);
        break;
    }
    case ProblemKind::linear_equality: {
        Eigen::Index n = p.h->dim(), m = p.rhs.size();
        if (point.size() != n + m)
            dim_error("kkt_residual: point does not match (x, s) layout");
        Eigen::VectorXd x = point.head(n), s = point.tail(m);
        rep.feasibility = (p.a_mat * x - p.rhs).norm();
        if (alg == AlgorithmKind::linearized_bregman) {
            // the lagged-gradient twin solves the rho-regularized problem
            Eigen::VectorXd target =
                p.a_mat.transpose() * s - x / params.rho;
            rep.stationarity =
                prox_residual(p.h->scaled(params.tau), x, target);
        } else {
            rep.stationarity =
                prox_residual(*p.h, x, p.a_mat.transpose() * s);
        }
        break;
    }
    }
    rep.pass = rep.feasibility <= tol && rep.stationarity <= tol;
    return rep;
}

/* ---- shipped generators ---------------------------------------------------- */

namespace {

struct LassoData {
    Eigen::VectorXd design_diag; // D = U diag(d): D^T D = diag(d^2)
    Eigen::MatrixXd design;
    Eigen::VectorXd y;
    double lambda;
};

LassoData make_lasso_data(int dim, std::uint64_t seed)
{
    if (dim < 2)
        throw Error(ErrorCode::invalid_argument, "lasso: dim must be >= 2");
    std::mt19937_64 rng = make_rng(seed);
    Eigen::MatrixXd u = random_orthogonal(dim, rng);
    std::uniform_real_distribution<double> dist(0.6, 1.4);
    Eigen::VectorXd d(dim);
    for (int i = 0; i < dim; ++i) d(i) = dist(rng);
    Eigen::MatrixXd design = u * d.asDiagonal();

    Eigen::VectorXd x_true = Eigen::VectorXd::Zero(dim);
    std::uniform_int_distribution<int> pick(0, dim - 1);
    int nnz = std::max(1, dim / 5);
    for (int i = 0; i < nnz; ++i) x_true(pick(rng)) = gaussian_vector(1, rng)(0);
    Eigen::VectorXd y =
        design * x_true + 0.05 * gaussian_vector(dim, rng);
    double lambda =
        0.2 * (design.transpose() * y).cwiseAbs().maxCoeff();
    return {d, std::move(design), std::move(y), lambda};
}

} // namespace

SplittingProblem lasso_composite(int dim, std::uint64_t seed)
{
    LassoData data = make_lasso_data(dim, seed);
    return SplittingProblem::composite(
        ProxFn::l1(data.lambda, dim), ProxFn::squared_l2(1.0, data.y),
        data.design);
}

SplittingProblem lasso_two_block(int dim, std::uint64_t seed)
{
    LassoData data = make_lasso_data(dim, seed);
    Eigen::MatrixXd hess = data.design.transpose() * data.design;
    hess = 0.5 * (hess + hess.transpose());
    Eigen::VectorXd lin = -data.design.transpose() * data.y;
    return SplittingProblem::two_block(
        ProxFn::quadratic(std::move(hess), std::move(lin)),
        ProxFn::l1(data.lambda, dim), eye(dim), -eye(dim),
        Eigen::VectorXd::Zero(dim));
}

MonotoneBlockOperator lasso_single_operator(int dim, std::uint64_t seed)
{
    LassoData data = make_lasso_data(dim, seed);
    Eigen::MatrixXd curvature =
        data.design_diag.cwiseAbs2().asDiagonal();
    return MonotoneBlockOperator({ProxFn::l1(data.lambda, dim)},
                                 std::move(curvature),
                                 data.design.transpose() * data.y, 0.0);
}

SplittingProblem qp_equality(int dim, std::uint64_t seed)
{
    if (dim < 2)
        throw Error(ErrorCode::invalid_argument, "qp: dim must be >= 2");
    std::mt19937_64 rng = make_rng(seed);
    Eigen::MatrixXd h = random_spd(dim, rng, 0.5, 3.0);
    Eigen::VectorXd q = gaussian_vector(dim, rng);
    int m = std::max(1, dim / 2);
    Eigen::MatrixXd a =
        gaussian_matrix(m, dim, rng) / std::sqrt(static_cast<double>(dim));
    Eigen::VectorXd c = a * gaussian_vector(dim, rng);
    return SplittingProblem::linear_equality(
        ProxFn::quadratic(std::move(h), std::move(q)), std::move(a),
        std::move(c));
}

MonotoneBlockOperator qp_operator(int dim, std::uint64_t seed)
{
    std::mt19937_64 rng = make_rng(seed);
    Eigen::MatrixXd h = random_spd(dim, rng, 0.5, 3.0);
    Eigen::VectorXd q = gaussian_vector(dim, rng);
    double mu = spectral_bounds(h).first;
    return MonotoneBlockOperator::from_blocks(
        {ProxFn::quadratic(std::move(h), std::move(q))}, std::max(0.0, mu));
}

SplittingProblem basis_pursuit(int dim, std::uint64_t seed)
{
    if (dim < 4)
        throw Error(ErrorCode::invalid_argument,
                    "basis_pursuit: dim must be >= 4");
    std::mt19937_64 rng = make_rng(seed);
    int m = dim / 2;
    Eigen::MatrixXd a =
        gaussian_matrix(m, dim, rng) / std::sqrt(static_cast<double>(m));
    Eigen::VectorXd x_true = Eigen::VectorXd::Zero(dim);
    std::uniform_int_distribution<int> pick(0, dim - 1);
    int nnz = std::max(1, dim / 5);
    for (int i = 0; i < nnz; ++i)
        x_true(pick(rng)) = gaussian_vector(1, rng)(0);
    Eigen::VectorXd c = a * x_true;
    return SplittingProblem::linear_equality(ProxFn::l1(1.0, dim),
                                             std::move(a), std::move(c));
}

/* ---- JSON ------------------------------------------------------------------- */

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& why)
{
    throw Error(ErrorCode::config_error, path + ": " + why);
}

const nlohmann::json& need(const nlohmann::json& j, const std::string& key,
                           const std::string& path)
{
    if (!j.contains(key)) config_error(path + "." + key, "missing field");
    return j.at(key);
}

double need_number(const nlohmann::json& j, const std::string& key,
                   const std::string& path)
{
    const nlohmann::json& v = need(j, key, path);
    if (!v.is_number()) config_error(path + "." + key, "expected a number");
    return v.get<double>();
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j,
                                 const std::string& path)
{
    if (!j.is_array()) config_error(path, "expected an array of numbers");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            config_error(path + "[" + std::to_string(i) + "]",
                         "expected a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v)
{
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

} // namespace

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j,
                                 const std::string& path)
{
    if (!j.is_object()) config_error(path, "expected {rows, cols, data}");
    int rows = static_cast<int>(need_number(j, "rows", path));
    int cols = static_cast<int>(need_number(j, "cols", path));
    if (rows <= 0 || cols <= 0) config_error(path, "shape must be positive");
    const nlohmann::json& data = need(j, "data", path);
    if (!data.is_array() ||
        data.size() != static_cast<std::size_t>(rows) * cols)
        config_error(path + ".data",
                     "expected " + std::to_string(rows * cols) +
                         " row-major entries, got " +
                         std::to_string(data.size()));
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const auto& e = data[static_cast<std::size_t>(r) * cols + c];
            if (!e.is_number())
                config_error(path + ".data", "entries must be numbers");
            m(r, c) = e.get<double>();
        }
    return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m)
{
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    j["data"] = data;
    return j;
}

ProxFn proxfn_from_json(const nlohmann::json& j, const std::string& path)
{
    if (!j.is_object()) config_error(path, "expected a function spec object");
    std::string kind = need(j, "kind", path).get<std::string>();
    if (kind == "zero") {
        int dim = static_cast<int>(need_number(j, "dim", path));
        return ProxFn::zero(dim);
    }
    if (kind == "l1") {
        int dim = static_cast<int>(need_number(j, "dim", path));
        return ProxFn::l1(need_number(j, "weight", path), dim);
    }
    if (kind == "squared_l2") {
        return ProxFn::squared_l2(
            need_number(j, "weight", path),
            vector_from_json(need(j, "center", path), path + ".center"));
    }
    if (kind == "box_indicator") {
        return ProxFn::box_indicator(
            vector_from_json(need(j, "lower", path), path + ".lower"),
            vector_from_json(need(j, "upper", path), path + ".upper"));
    }
    if (kind == "box_support") {
        return ProxFn::box_support(
            vector_from_json(need(j, "lower", path), path + ".lower"),
            vector_from_json(need(j, "upper", path), path + ".upper"));
    }
    if (kind == "quadratic") {
        return ProxFn::quadratic(
            matrix_from_json(need(j, "H", path), path + ".H"),
            vector_from_json(need(j, "q", path), path + ".q"));
    }
    config_error(path + ".kind", "unknown function kind '" + kind + "'");
}

nlohmann::json proxfn_to_json(const ProxFn& fn)
{
    nlohmann::json j;
    j["kind"] = to_string(fn.kind());
    switch (fn.kind()) {
    case ProxKind::zero:
        j["dim"] = fn.dim();
        break;
    case ProxKind::l1:
        j["dim"] = fn.dim();
        j["weight"] = fn.weight();
        break;
    case ProxKind::squared_l2:
        j["weight"] = fn.weight();
        j["center"] = vector_to_json(fn.center());
        break;
    case ProxKind::box_indicator:
    case ProxKind::box_support:
        j["lower"] = vector_to_json(fn.lower());
        j["upper"] = vector_to_json(fn.upper());
        break;
    case ProxKind::quadratic:
        j["H"] = matrix_to_json(fn.hessian());
        j["q"] = vector_to_json(fn.linear());
        break;
    }
    return j;
}

SplittingProblem problem_from_json(const nlohmann::json& j)
{
    const std::string path = "problem";
    if (!j.is_object()) config_error(path, "expected an object");
    std::string kind = need(j, "kind", path).get<std::string>();
    const nlohmann::json& fns = need(j, "functions", path);
    const nlohmann::json& mats = need(j, "matrices", path);

    auto get_vec = [&](const char* name) {
        Eigen::MatrixXd m = matrix_from_json(need(mats, name, path + ".matrices"),
                                             path + ".matrices." + name);
        if (m.cols() != 1)
            config_error(path + ".matrices." + std::string(name),
                         "expected a column vector (cols = 1)");
        return Eigen::VectorXd(m.col(0));
    };

    if (kind == "two_block_constrained") {
        return SplittingProblem::two_block(
            proxfn_from_json(need(fns, "f", path + ".functions"),
                             path + ".functions.f"),
            proxfn_from_json(need(fns, "g", path + ".functions"),
                             path + ".functions.g"),
            matrix_from_json(need(mats, "A", path + ".matrices"),
                             path + ".matrices.A"),
            matrix_from_json(need(mats, "B", path + ".matrices"),
                             path + ".matrices.B"),
            get_vec("c"));
    }
    if (kind == "composite") {
        return SplittingProblem::composite(
            proxfn_from_json(need(fns, "f", path + ".functions"),
                             path + ".functions.f"),
            proxfn_from_json(need(fns, "g", path + ".functions"),
                             path + ".functions.g"),
            matrix_from_json(need(mats, "A", path + ".matrices"),
                             path + ".matrices.A"));
    }
    if (kind == "linear_equality") {
        return SplittingProblem::linear_equality(
            proxfn_from_json(need(fns, "h", path + ".functions"),
                             path + ".functions.h"),
            matrix_from_json(need(mats, "A", path + ".matrices"),
                             path + ".matrices.A"),
            get_vec("c"));
    }
    config_error(path + ".kind", "unknown problem kind '" + kind + "'");
}

nlohmann::json problem_to_json(const SplittingProblem& p)
{
    nlohmann::json j;
    j["kind"] = to_string(p.kind);
    nlohmann::json fns, mats;
    switch (p.kind) {
    case ProblemKind::two_block_constrained:
        fns["f"] = proxfn_to_json(*p.f);
        fns["g"] = proxfn_to_json(*p.g);
        mats["A"] = matrix_to_json(p.a_mat);
        mats["B"] = matrix_to_json(p.b_mat);
        mats["c"] = matrix_to_json(p.rhs);
        break;
    case ProblemKind::composite:
        fns["f"] = proxfn_to_json(*p.f);
        fns["g"] = proxfn_to_json(*p.g);
        mats["A"] = matrix_to_json(p.a_mat);
        break;
    case ProblemKind::linear_equality:
        fns["h"] = proxfn_to_json(*p.h);
        mats["A"] = matrix_to_json(p.a_mat);
        mats["c"] = matrix_to_json(p.rhs);
        break;
    }
    j["functions"] = fns;
    j["matrices"] = mats;
    return j;
}

} // namespace mr
