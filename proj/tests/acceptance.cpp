/*=============================================================================
 * Acceptance suite: one binary, one line per criterion.
 *
 * Every tolerance is pinned here, in code:
 *   1  firm nonexpansiveness margins       >= -1e-8   (runtime < 30 s)
 *   2  strong cocoercivity margins         >= -1e-8
 *   3  generalized Moreau identity         <= 1e-8 (1 + ||b||)
 *   4  sequential rate, plain iteration    (1 + 1e-6) multiplicative slack
 *   5  objective rates + decrease bracket  1e-6 relative / 1e-8 additive
 *   6  linear rates under strong monotonicity
 *   7  relaxed-iteration rates for gamma in {0.5, 1.0, 1.5, 1.9}
 *   8  corrected-scheme contraction        slack >= -1e-8
 *   9  twin equivalence, 7 builders x 3 seeds x 200 steps <= 1e-10
 *      (runtime < 120 s)
 *  10  reference points certify first-order optimality <= 1e-7
 *  11  negative controls exit 2 (falsified constant) and 1 (bad params)
 *============================================================================*/
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "core/experiment.hpp"
#include "core/iterate.hpp"
#include "core/random.hpp"
#include "core/rates.hpp"
#include "core/splitting.hpp"

using namespace mr;

namespace {

int g_failures = 0;

void report(int id, const std::string& label, bool pass,
            const std::string& detail)
{
    std::printf("%s criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", id,
                label.c_str(), detail.empty() ? "" : " -- ",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

/* monotone linear operator A = SPD + skew as a one-block scheme */
ResolventScheme linear_instance(int dim, double mu_lo, double mu_hi,
                                const Eigen::MatrixXd& q_mat,
                                std::mt19937_64& rng)
{
    Eigen::MatrixXd sym = random_spd(dim, rng, mu_lo, mu_hi);
    Eigen::MatrixXd skew = random_skew(dim, rng);
    double mu = std::max(0.0, spectral_bounds(sym).first);
    MonotoneBlockOperator op(
        {ProxFn::quadratic(sym, Eigen::VectorXd::Zero(dim))}, skew,
        Eigen::VectorXd::Zero(dim), mu);
    return ResolventScheme::make(op, classify_metric(q_mat));
}

/* one proximable block, optional added curvature mu through the coupling */
ResolventScheme prox_kind_instance(ProxKind kind, int dim, double mu,
                                   const Eigen::MatrixXd& q_mat,
                                   std::mt19937_64& rng)
{
    ProxFn fn = [&]() -> ProxFn {
        switch (kind) {
        case ProxKind::zero: return ProxFn::zero(dim);
        case ProxKind::l1: return ProxFn::l1(0.7, dim);
        case ProxKind::squared_l2:
            return ProxFn::squared_l2(std::max(mu, 0.8),
                                      gaussian_vector(dim, rng));
        case ProxKind::box_indicator:
            return ProxFn::box_indicator(
                Eigen::VectorXd::Constant(dim, -1.0),
                Eigen::VectorXd::Constant(dim, 0.7));
        case ProxKind::box_support:
            return ProxFn::box_support(Eigen::VectorXd::Constant(dim, -0.5),
                                       Eigen::VectorXd::Constant(dim, 1.0));
        case ProxKind::quadratic:
            return ProxFn::quadratic(
                random_spd(dim, rng, std::max(mu, 0.5), 3.0),
                gaussian_vector(dim, rng));
        }
        throw Error(ErrorCode::internal, "unhandled kind");
    }();
    bool carries_mu = kind == ProxKind::squared_l2 ||
                      kind == ProxKind::quadratic;
    Eigen::MatrixXd coup = Eigen::MatrixXd::Zero(dim, dim);
    double op_mu = fn.strong_convexity_modulus();
    if (mu > 0.0 && !carries_mu) {
        coup = mu * Eigen::MatrixXd::Identity(dim, dim);
        op_mu = mu;
    }
    MonotoneBlockOperator op({std::move(fn)}, std::move(coup),
                             Eigen::VectorXd::Zero(dim), op_mu);
    return ResolventScheme::make(op, classify_metric(q_mat));
}

/* strongly convex quadratic program as a one-block scheme */
ResolventScheme qp_instance(int dim, double mu_lo, double mu_hi,
                            const Eigen::MatrixXd& q_mat,
                            std::mt19937_64& rng)
{
    Eigen::MatrixXd h = random_spd(dim, rng, mu_lo, mu_hi);
    double mu = std::max(0.0, spectral_bounds(h).first);
    MonotoneBlockOperator op = MonotoneBlockOperator::from_blocks(
        {ProxFn::quadratic(h, gaussian_vector(dim, rng))}, mu);
    return ResolventScheme::make(op, classify_metric(q_mat));
}

Eigen::MatrixXd diag_pd(int dim, std::mt19937_64& rng, double lo = 0.5,
                        double hi = 2.0)
{
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::VectorXd d(dim);
    for (int i = 0; i < dim; ++i) d(i) = dist(rng);
    return Eigen::MatrixXd(d.asDiagonal());
}

struct BuilderInstance {
    std::string label;
    AlgorithmKind alg;
    SplittingProblem problem;
    AlgoParams params;
    ResolventScheme scheme;
};

std::vector<BuilderInstance> gallery_instances(std::uint64_t seed_base,
                                               int n_seeds)
{
    std::vector<BuilderInstance> out;
    std::vector<int> dims = {10, 16, 24};
    for (int i = 0; i < n_seeds; ++i) {
        std::uint64_t seed = seed_base + static_cast<std::uint64_t>(i);
        int dim = dims[static_cast<std::size_t>(i) % dims.size()];

        for (double gamma : {0.8, 1.0, 1.5}) {
            SplittingProblem p = lasso_two_block(dim, seed);
            AlgoParams params;
            params.tau = 0.9;
            params.gamma = gamma;
            ResolventScheme s = build_relaxed_admm(p, params.tau, gamma);
            out.push_back({"relaxed_admm(gamma=" + fmt(gamma) + ")",
                           AlgorithmKind::relaxed_admm, std::move(p), params,
                           std::move(s)});
        }
        {
            SplittingProblem p = lasso_two_block(dim, seed + 100);
            AlgoParams params;
            params.tau = 0.8;
            std::mt19937_64 rng = make_rng(seed + 500);
            params.p1 = diag_pd(dim, rng, 0.2, 0.8);
            params.p2 = diag_pd(dim, rng, 0.2, 0.8);
            ResolventScheme s =
                build_proximal_admm(p, params.tau, *params.p1, *params.p2);
            out.push_back({"proximal_admm", AlgorithmKind::proximal_admm,
                           std::move(p), params, std::move(s)});
        }
        {
            SplittingProblem p = lasso_composite(dim, seed + 200);
            double na = operator_norm(p.a_mat);
            AlgoParams params;
            params.sigma = 0.9 / na;
            params.tau = 0.9 / na;
            ResolventScheme s = build_pdhg_mp(p, params.sigma, params.tau);
            out.push_back({"pdhg_mp", AlgorithmKind::pdhg_mp, std::move(p),
                           params, std::move(s)});
        }
        {
            SplittingProblem p = lasso_composite(dim, seed + 300);
            double na = operator_norm(p.a_mat);
            AlgoParams params;
            params.sigma = 0.8 / na;
            params.tau = 0.8 / na;
            ResolventScheme s = build_pdhg_mu(p, params.sigma, params.tau);
            out.push_back({"pdhg_mu", AlgorithmKind::pdhg_mu, std::move(p),
                           params, std::move(s)});
        }
        {
            SplittingProblem p = qp_equality(dim, seed + 400);
            AlgoParams params;
            params.tau = 0.7;
            ResolventScheme s = build_alm(p, params.tau);
            out.push_back({"alm", AlgorithmKind::alm, std::move(p), params,
                           std::move(s)});
        }
        {
            SplittingProblem p = basis_pursuit(dim, seed + 500);
            double na2 = operator_norm(p.a_mat) * operator_norm(p.a_mat);
            AlgoParams params;
            params.tau = 0.9;
            params.rho = params.tau * na2 + 0.8;
            ResolventScheme s =
                build_linearized_alm(p, params.tau, params.rho);
            out.push_back({"linearized_alm", AlgorithmKind::linearized_alm,
                           std::move(p), params, std::move(s)});
        }
        {
            SplittingProblem p = basis_pursuit(dim, seed + 600);
            double na2 = operator_norm(p.a_mat) * operator_norm(p.a_mat);
            AlgoParams params;
            params.tau = 0.9;
            params.rho = 0.9 / na2;
            ResolventScheme s =
                build_linearized_bregman(p, params.tau, params.rho);
            out.push_back({"linearized_bregman",
                           AlgorithmKind::linearized_bregman, std::move(p),
                           params, std::move(s)});
        }
    }
    return out;
}

/* ---- criterion 1 ------------------------------------------------------- */

void criterion_1()
{
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng = make_rng(1001);
    std::uniform_int_distribution<int> dim_dist(5, 50);
    double worst = 0.0;
    int schemes = 0;
    bool pass = true;
    std::string why;

    std::vector<ProxKind> kinds = {ProxKind::zero, ProxKind::l1,
                                   ProxKind::squared_l2,
                                   ProxKind::box_indicator,
                                   ProxKind::quadratic};
    try {
        // ten monotone linear operators under dense SPD metrics
        for (int i = 0; i < 10; ++i) {
            int dim = dim_dist(rng);
            ResolventScheme s = linear_instance(
                dim, 0.0, 2.0, random_spd(dim, rng, 0.4, 2.5), rng);
            for (const auto& rep :
                 check_partial_nonexpansive(s, 200, 2000 + i)) {
                worst = std::min(worst, rep.worst_margin);
                if (!rep.pass) { pass = false; why = rep.name; }
            }
            ++schemes;
        }
        // two schemes per proximable kind under diagonal SPD metrics
        for (ProxKind kind : kinds) {
            for (int rep_i = 0; rep_i < 2; ++rep_i) {
                int dim = dim_dist(rng);
                Eigen::MatrixXd q = kind == ProxKind::quadratic
                                        ? random_spd(dim, rng, 0.4, 2.5)
                                        : diag_pd(dim, rng);
                ResolventScheme s = prox_kind_instance(kind, dim, 0.0, q, rng);
                for (const auto& rep :
                     check_partial_nonexpansive(s, 200, 3000 + rep_i)) {
                    worst = std::min(worst, rep.worst_margin);
                    if (!rep.pass) { pass = false; why = rep.name; }
                }
                ++schemes;
            }
        }
    } catch (const Error& e) {
        pass = false;
        why = e.what();
    }
    double elapsed = seconds_since(t0);
    if (elapsed >= 30.0) { pass = false; why = "runtime limit exceeded"; }
    report(1, "firm nonexpansiveness over " + std::to_string(schemes) +
                  " schemes",
           pass,
           "worst margin " + fmt(worst) + ", " + fmt(elapsed) + " s" +
               (why.empty() ? "" : ", " + why));
}

/* ---- criterion 2 -------------------------------------------------------- */

void criterion_2()
{
    std::mt19937_64 rng = make_rng(1002);
    std::uniform_int_distribution<int> dim_dist(5, 50);
    double worst = 0.0;
    bool pass = true;
    std::string why;
    std::vector<ProxKind> kinds = {ProxKind::zero, ProxKind::l1,
                                   ProxKind::squared_l2,
                                   ProxKind::box_indicator,
                                   ProxKind::quadratic};
    try {
        for (int i = 0; i < 10; ++i) {
            int dim = dim_dist(rng);
            ResolventScheme s = linear_instance(
                dim, 0.6, 2.2, random_spd(dim, rng, 0.4, 2.0), rng);
            auto reps = check_partial_nonexpansive(s, 200, 4000 + i);
            if (reps.size() != 3) { pass = false; why = "no strong report"; }
            for (const auto& rep : reps) {
                worst = std::min(worst, rep.worst_margin);
                if (!rep.pass) { pass = false; why = rep.name; }
            }
        }
        for (ProxKind kind : kinds) {
            for (int rep_i = 0; rep_i < 2; ++rep_i) {
                int dim = dim_dist(rng);
                Eigen::MatrixXd q = kind == ProxKind::quadratic
                                        ? random_spd(dim, rng, 0.4, 2.0)
                                        : diag_pd(dim, rng);
                ResolventScheme s =
                    prox_kind_instance(kind, dim, 0.9, q, rng);
                if (!(s.op().mu() > 0.0)) {
                    pass = false;
                    why = "instance lost its modulus";
                    continue;
                }
                auto reps = check_partial_nonexpansive(s, 200, 5000 + rep_i);
                if (reps.size() != 3) { pass = false; why = "no strong report"; }
                for (const auto& rep : reps) {
                    worst = std::min(worst, rep.worst_margin);
                    if (!rep.pass) { pass = false; why = rep.name; }
                }
            }
        }
    } catch (const Error& e) {
        pass = false;
        why = e.what();
    }
    report(2, "strong-monotonicity cocoercivity", pass,
           "worst margin " + fmt(worst) +
               (why.empty() ? "" : ", " + why));
}

/* ---- criterion 3 ----------------------------------------------------------- */

void criterion_3()
{
    std::mt19937_64 rng = make_rng(1003);
    double worst = 0.0;
    int count = 0;
    bool pass = true;
    std::string why;
    try {
        for (int t = 0; t < 10; ++t) {
            int dim = 3 + (t % 5);
            // l1 and box families under diagonal metrics
            for (const ProxFn& h :
                 {ProxFn::l1(0.8, dim),
                  ProxFn::box_indicator(Eigen::VectorXd::Constant(dim, -0.7),
                                        Eigen::VectorXd::Constant(dim, 1.2)),
                  ProxFn::squared_l2(1.3, gaussian_vector(dim, rng))}) {
                Metric q = classify_metric(diag_pd(dim, rng, 0.4, 3.0));
                Eigen::VectorXd b = 2.0 * gaussian_vector(dim, rng);
                auto [p, d] = moreau_decompose(h, q, b);
                double res = (p + d - b).norm() / (1.0 + b.norm());
                worst = std::max(worst, res);
                if (res > 1e-8) pass = false;
                ++count;
            }
            // zero and quadratic under dense SPD metrics
            {
                Metric q = classify_metric(random_spd(dim, rng, 0.4, 2.5));
                Eigen::VectorXd b = 2.0 * gaussian_vector(dim, rng);
                auto [p, d] = moreau_decompose(ProxFn::zero(dim), q, b);
                double res = (p + d - b).norm() / (1.0 + b.norm());
                worst = std::max(worst, res);
                if (res > 1e-8) pass = false;
                ++count;
            }
            {
                Metric q = classify_metric(random_spd(dim, rng, 0.4, 2.5));
                ProxFn h = ProxFn::quadratic(random_spd(dim, rng, 0.3, 2.0),
                                             gaussian_vector(dim, rng));
                Eigen::VectorXd b = 2.0 * gaussian_vector(dim, rng);
                auto [p, d] = moreau_decompose(h, q, b);
                double res = (p + d - b).norm() / (1.0 + b.norm());
                worst = std::max(worst, res);
                if (res > 1e-8) pass = false;
                ++count;
            }
        }
    } catch (const Error& e) {
        pass = false;
        why = e.what();
    }
    report(3, "generalized Moreau identity on " + std::to_string(count) +
                  " triples",
           pass,
           "worst residual " + fmt(worst) +
               (why.empty() ? "" : ", " + why));
}

/* ---- criterion 4 -------------------------------------------------------------- */

struct RateSuiteInstance {
    ResolventScheme scheme;
    Eigen::VectorXd reference;
    Eigen::VectorXd b0;
};

std::vector<RateSuiteInstance> sequential_suite(std::uint64_t seed)
{
    std::mt19937_64 rng = make_rng(seed);
    std::uniform_int_distribution<int> dim_dist(5, 30);
    std::vector<RateSuiteInstance> out;
    for (int i = 0; i < 10; ++i) {
        int dim = dim_dist(rng);
        ResolventScheme scheme =
            i < 5 ? linear_instance(dim, 0.2, 1.5,
                                    random_spd(dim, rng, 0.5, 2.0), rng)
                  : qp_instance(dim, 0.3, 2.0,
                                random_spd(dim, rng, 0.5, 2.0), rng);
        Eigen::VectorXd ref =
            compute_reference(scheme, Eigen::VectorXd::Zero(dim));
        Eigen::VectorXd b0 = ref + 2.0 * gaussian_vector(dim, rng);
        out.push_back({std::move(scheme), std::move(ref), std::move(b0)});
    }
    return out;
}

void criterion_4()
{
    bool pass = true;
    double worst = std::numeric_limits<double>::infinity();
    std::string why;
    try {
        for (RateSuiteInstance& inst : sequential_suite(1004)) {
            RunOptions opts;
            opts.max_iter = 2000;
            opts.eps = 1e-300;
            IterationTrace trace =
                run_iteration(inst.scheme, inst.b0, opts);
            RateBound bound =
                make_rate_bound(RateFormula::picard_sequential, inst.scheme,
                                inst.b0, inst.reference);
            RateReport rep = check_trace(bound, trace, inst.scheme);
            worst = std::min(worst, rep.worst_slack);
            if (!rep.pass || rep.checked == 0) { pass = false; why = "violated"; }
        }
    } catch (const Error& e) {
        pass = false;
        why = e.what();
    }
    report(4, "sequential rate of the plain iteration on 10 instances", pass,
           "worst slack " + fmt(worst) + (why.empty() ? "" : ", " + why));
}

/* ---- criterion 5 ------------------------------------------------------------------ */

void criterion_5()
{
    bool pass = true;
    std::string why;
    double worst = std::numeric_limits<double>::infinity();
    try {
        int idx = 0;
        for (int dim : {10, 50}) {
            for (double tau : {1.0, 1.4}) {
                MonotoneBlockOperator op =
                    lasso_single_operator(dim, 1005 + idx);
                ResolventScheme scheme = ResolventScheme::make(
                    op, classify_metric((1.0 / tau) *
                                        Eigen::MatrixXd::Identity(dim, dim)));
                Eigen::VectorXd ref =
                    compute_reference(scheme, Eigen::VectorXd::Zero(dim));
                double h_star = *scheme.op().objective_value(ref);
                std::mt19937_64 rng = make_rng(2005 + idx);
                Eigen::VectorXd b0 = ref + 1.5 * gaussian_vector(dim, rng);

                RunOptions opts;
                opts.max_iter = 2000;
                opts.eps = 1e-300;
                opts.reference = ref;
                IterationTrace trace = run_iteration(scheme, b0, opts);

                for (RateFormula f : {RateFormula::objective_ergodic,
                                      RateFormula::objective_nonergodic}) {
                    RateBound bound =
                        make_rate_bound(f, scheme, b0, ref, h_star);
                    RateReport rep = check_trace(bound, trace, scheme);
                    worst = std::min(worst, rep.worst_slack);
                    if (!rep.pass || rep.checked == 0) {
                        pass = false;
                        why = to_string(f);
                    }
                }
                TraceCheckReport bracket =
                    check_seq_decrease_bracket(trace, scheme);
                worst = std::min(worst, bracket.worst_slack);
                if (!bracket.pass || bracket.checked == 0) {
                    pass = false;
                    why = "decrease bracket";
                }
                ++idx;
            }
        }
    } catch (const Error& e) {
        pass = false;
        why = e.what();
    }
    report(5, "objective rates and decrease bracket on soft-threshold runs",
           pass, "worst slack " + fmt(worst) + (why.empty() ? "" : ", " + why));
}

/* ---- criterion 6 ------------------------------------------------------------- */

void criterion_6()
{
    bool pass = true;
    std::string why;
    double worst = std::numeric_limits<double>::infinity();
    int rlinear_checked = 0;
    try {
        std::mt19937_64 rng = make_rng(1006);
        struct Cfg { double lo, hi; };
        // spectra straddling the global/local validity corners
        std::vector<Cfg> cfgs = {{4.0, 6.0}, {2.0, 3.0}, {0.3, 1.2},
                                 {0.5, 0.9}};
        int idx = 0;
        for (const Cfg& cfg : cfgs) {
            int dim = 8 + 4 * idx;
            ResolventScheme scheme =
                qp_instance(dim, cfg.lo, cfg.hi,
                            Eigen::MatrixXd::Identity(dim, dim), rng);
            Eigen::VectorXd ref =
                compute_reference(scheme, Eigen::VectorXd::Zero(dim));
            double h_star = *scheme.op().objective_value(ref);
            Eigen::VectorXd b0 = ref + 2.0 * gaussian_vector(dim, rng);

            RunOptions opts;
            opts.max_iter = 500;
            opts.eps = 1e-300;
            opts.reference = ref;
            IterationTrace trace = run_iteration(scheme, b0, opts);

            for (RateFormula f :
                 {RateFormula::q_linear_distance, RateFormula::strong_objective,
                  RateFormula::r_linear_residual,
                  RateFormula::strong_objective_rlinear}) {
                RateBound bound = make_rate_bound(f, scheme, b0, ref, h_star);
                RateReport rep = check_trace(bound, trace, scheme);
                worst = std::min(worst, rep.worst_slack);
                if (!rep.pass) { pass = false; why = to_string(f); }
                if (f == RateFormula::r_linear_residual ||
                    f == RateFormula::strong_objective_rlinear)
                    rlinear_checked += rep.checked;
                else if (rep.checked == 0) {
                    pass = false;
                    why = std::string(to_string(f)) + " skipped";
                }
            }
            ++idx;
        }
        if (rlinear_checked == 0) {
            pass = false;
            why = "r-linear bounds never valid";
        }
    } catch (const Error& e) {
        pass = false;
        why = e.what();
    }
    report(6, "linear rates under strong monotonicity", pass,
           "worst slack " + fmt(worst) + ", r-linear points " +
               std::to_string(rlinear_checked) +
               (why.empty() ? "" : ", " + why));
}

/* ---- criterion 7 --------------------------------------------------------------- */

void criterion_7()
{
    bool pass = true;
    std::string why;
    double worst = std::numeric_limits<double>::infinity();
    int mu_checked = 0;
    try {
        std::vector<RateSuiteInstance> base = sequential_suite(1007);
        for (double gamma : {0.5, 1.0, 1.5, 1.9}) {
            for (RateSuiteInstance& inst : base) {
                ResolventScheme km = ResolventScheme::make_relaxed(
                    inst.scheme.op(), inst.scheme.metric(), gamma);
                RunOptions opts;
                opts.max_iter = 1500;
                opts.eps = 1e-300;
                opts.reference = inst.reference;
                IterationTrace trace = run_iteration(km, inst.b0, opts);

                RateBound bound = make_rate_bound(
                    RateFormula::km_sequential, km, inst.b0, inst.reference);
                RateReport rep = check_trace(bound, trace, km);
                worst = std::min(worst, rep.worst_slack);
                if (!rep.pass || rep.checked == 0) {
                    pass = false;
                    why = "km_sequential gamma=" + fmt(gamma);
                }

                double mu = km.op().mu(), qn = km.metric().op_norm();
                bool admissible =
                    mu > 0.0 && gamma < 1.0 + qn / (2.0 * mu + qn);
                if (admissible) {
                    for (RateFormula f : {RateFormula::km_mu_sequential,
                                          RateFormula::km_q_linear}) {
                        RateBound mb = make_rate_bound(f, km, inst.b0,
                                                       inst.reference);
                        RateReport mrep = check_trace(mb, trace, km);
                        worst = std::min(worst, mrep.worst_slack);
                        mu_checked += mrep.checked;
                        if (!mrep.pass) {
                            pass = false;
                            why = std::string(to_string(f)) +
                                  " gamma=" + fmt(gamma);
                        }
                    }
                }
            }
        }
        if (mu_checked == 0) {
            pass = false;
            why = "strong-monotone relaxed bounds never checked";
        }
    } catch (const Error& e) {
        pass = false;
        why = e.what();
    }
    report(7, "relaxed-iteration rates for four relaxations", pass,
           "worst slack " + fmt(worst) + ", strengthened points " +
               std::to_string(mu_checked) + (why.empty() ? "" : ", " + why));
}

/* ---- criterion 8 --------------------------------------------------------------- */

void criterion_8()
{
    bool pass = true;
    std::string why;
    double worst = std::numeric_limits<double>::infinity();
    int pd_instances = 0, seminorm_instances = 0;
    try {
        std::vector<BuilderInstance> instances = gallery_instances(1008, 2);
        for (BuilderInstance& inst : instances) {
            Eigen::VectorXd ref = compute_reference(
                inst.scheme, Eigen::VectorXd::Zero(inst.scheme.dim()),
                120000);
            std::mt19937_64 rng = make_rng(1088);
            Eigen::VectorXd b0 =
                ref + gaussian_vector(inst.scheme.dim(), rng);
            RunOptions opts;
            opts.max_iter = 400;
            opts.eps = 1e-300;
            opts.reference = ref;
            IterationTrace trace = run_iteration(inst.scheme, b0, opts);

            TraceCheckReport fejer = check_fejer_S(trace, inst.scheme, ref);
            worst = std::min(worst, fejer.worst_slack);
            if (!fejer.pass) { pass = false; why = inst.label + " fejer"; }

            TraceCheckReport dec =
                check_residual_decrease_S(trace, inst.scheme);
            worst = std::min(worst, dec.worst_slack);
            if (!dec.pass) { pass = false; why = inst.label + " decrease"; }

            bool pd = inst.scheme.s_metric().is_spd() &&
                      inst.scheme.g_metric().is_spd();
            if (pd) {
                ++pd_instances;
                RateBound bound =
                    make_rate_bound(RateFormula::generalized_sequential,
                                    inst.scheme, b0, ref);
                RateReport rep = check_trace(bound, trace, inst.scheme);
                worst = std::min(worst, rep.worst_slack);
                if (!rep.pass || rep.checked == 0) {
                    pass = false;
                    why = inst.label + " generalized_sequential";
                }
            } else {
                ++seminorm_instances;
            }
        }
        if (pd_instances == 0) { pass = false; why = "no PD instances"; }
    } catch (const Error& e) {
        pass = false;
        why = e.what();
    }
    report(8, "corrected-scheme contraction across the gallery", pass,
           "worst slack " + fmt(worst) + ", " +
               std::to_string(pd_instances) + " PD + " +
               std::to_string(seminorm_instances) + " seminorm instances" +
               (why.empty() ? "" : ", " + why));
}

/* ---- criterion 9 ------------------------------------------------------------------ */

void criterion_9()
{
    auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    std::string why;
    double worst_drift = 0.0;
    int pairs = 0;
    try {
        std::vector<BuilderInstance> instances = gallery_instances(1009, 3);
        for (BuilderInstance& inst : instances) {
            NativeTwin twin =
                make_native(inst.alg, inst.problem, inst.params);
            std::mt19937_64 rng = make_rng(9000 + pairs);
            Eigen::VectorXd b0 = gaussian_vector(inst.scheme.dim(), rng);
            double drift = twin_max_drift(inst.scheme, twin, b0, 200);
            worst_drift = std::max(worst_drift, drift);
            if (!(drift < 1e-10)) { pass = false; why = inst.label; }
            ++pairs;
        }
    } catch (const Error& e) {
        pass = false;
        why = e.what();
    }
    double elapsed = seconds_since(t0);
    if (elapsed >= 120.0) { pass = false; why = "runtime limit exceeded"; }
    report(9, "twin equivalence over " + std::to_string(pairs) +
                  " scheme/native pairs",
           pass,
           "max drift " + fmt(worst_drift) + ", " + fmt(elapsed) + " s" +
               (why.empty() ? "" : ", " + why));
}

/* ---- criterion 10 ------------------------------------------------------------------- */

void criterion_10()
{
    bool pass = true;
    std::string why;
    double worst = 0.0;
    int certified = 0;
    try {
        std::vector<BuilderInstance> instances = gallery_instances(1010, 1);
        for (BuilderInstance& inst : instances) {
            Eigen::VectorXd ref = compute_reference(
                inst.scheme, Eigen::VectorXd::Zero(inst.scheme.dim()),
                120000);
            KktReport kkt =
                kkt_residual(inst.alg, inst.problem, inst.params, ref);
            worst = std::max(worst,
                             std::max(kkt.feasibility, kkt.stationarity));
            if (!kkt.pass) { pass = false; why = inst.label; }
            ++certified;
        }
        // inline-operator references certify through the inclusion residual
        for (RateSuiteInstance& inst : sequential_suite(1010)) {
            ApplyResult res =
                inst.scheme.apply_T_certified(inst.reference);
            double rel =
                res.selection.norm() / (1.0 + res.b_tilde.norm());
            worst = std::max(worst, rel);
            if (rel > 1e-7) { pass = false; why = "inline certificate"; }
            ++certified;
        }
    } catch (const Error& e) {
        pass = false;
        why = e.what();
    }
    report(10, "reference points certify first-order optimality", pass,
           std::to_string(certified) + " references, worst residual " +
               fmt(worst) + (why.empty() ? "" : ", " + why));
}

/* ---- criterion 11 -------------------------------------------------------------------- */

void criterion_11()
{
    namespace fs = std::filesystem;
    bool pass = true;
    std::string why;
    try {
        fs::path dir = fs::temp_directory_path() / "mr_acceptance_neg";
        fs::remove_all(dir);
        fs::create_directories(dir);

        nlohmann::json config;
        config["problem"] = {{"generator",
                              {{"name", "lasso"},
                               {"form", "composite"},
                               {"dim", 10},
                               {"seed", 11}}}};
        config["algorithm"] = {{"name", "pdhg_mp"},
                               {"params", {{"sigma", 0.4}, {"tau", 0.4}}}};
        config["run"] = {{"max_iter", 200},
                         {"eps", 1e-13},
                         {"seed", 11},
                         {"b0", "random"},
                         {"reference", "long_run"}};
        config["checks"] = {"picard_sequential"};
        config["output"] = {{"trace_path", (dir / "t.csv").string()},
                            {"report_path", (dir / "r.json").string()}};

        ExperimentOutcome honest = run_experiment_json(config, false);
        if (honest.exit_code != 0) {
            pass = false;
            why = "baseline run failed: " + honest.message;
        }
        ExperimentOutcome falsified = run_experiment_json(config, true);
        if (falsified.exit_code != 2) {
            pass = false;
            why = "falsified constant did not exit 2";
        }

        nlohmann::json bad = config;
        bad["algorithm"]["params"]["sigma"] = 1.2;
        bad["algorithm"]["params"]["tau"] = 1.0;
        ExperimentOutcome inadmissible = run_experiment_json(bad, false);
        if (inadmissible.exit_code != 1 ||
            inadmissible.message.find("sigma*tau*||A||^2") ==
                std::string::npos) {
            pass = false;
            why = "inadmissible parameters did not exit 1 with the "
                  "condition named";
        }
    } catch (const Error& e) {
        pass = false;
        why = e.what();
    }
    report(11, "negative controls fail as designed", pass, why);
}

} // namespace

int main()
{
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    if (g_failures)
        std::printf("%d criterion(s) failed\n", g_failures);
    else
        std::printf("all acceptance criteria passed\n");
    return g_failures == 0 ? 0 : 1;
}
