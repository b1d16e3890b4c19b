#include <doctest.h>

#include "core/random.hpp"
#include "core/rates.hpp"
#include "oracles.hpp"

using namespace mr;

namespace {

ResolventScheme quadratic_scheme(const Eigen::MatrixXd& h,
                                 const Eigen::VectorXd& q_lin,
                                 const Eigen::MatrixXd& q_mat,
                                 std::optional<double> gamma = std::nullopt)
{
    auto ev = spectral_bounds(h);
    MonotoneBlockOperator op =
        MonotoneBlockOperator::from_blocks({ProxFn::quadratic(h, q_lin)},
                                           std::max(0.0, ev.first));
    Metric q = classify_metric(q_mat);
    if (gamma)
        return ResolventScheme::make_relaxed(op, std::move(q), *gamma);
    return ResolventScheme::make(op, std::move(q));
}

/* single-block soft-thresholding problem with diagonal design:
 * h(x) = 0.5||Dx - y||^2 + lambda ||x||_1, D^T D diagonal */
ResolventScheme lasso_diag_scheme(int n, double lambda, double tau,
                                  std::uint64_t seed)
{
    std::mt19937_64 rng = make_rng(seed);
    Eigen::MatrixXd u = random_orthogonal(n, rng);
    Eigen::VectorXd d(n);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    for (int i = 0; i < n; ++i) d(i) = dist(rng);
    Eigen::MatrixXd design = u * d.asDiagonal();
    Eigen::VectorXd y = design * gaussian_vector(n, rng) * 0.5 +
                        0.1 * gaussian_vector(n, rng);
    // dPhi = lambda dl1, L = D^T D (diagonal), shift = D^T y
    MonotoneBlockOperator op({ProxFn::l1(lambda, n)},
                             Eigen::MatrixXd(d.cwiseAbs2().asDiagonal()),
                             design.transpose() * y, 0.0);
    return ResolventScheme::make(
        op, classify_metric((1.0 / tau) *
                            Eigen::MatrixXd::Identity(n, n)));
}

} // namespace

TEST_CASE("zero operator stops after one step")
{
    std::mt19937_64 rng = make_rng(1);
    MonotoneBlockOperator op =
        MonotoneBlockOperator::from_blocks({ProxFn::zero(3)});
    ResolventScheme scheme = ResolventScheme::make(
        op, classify_metric(random_spd(3, rng, 0.5, 2.0)));
    RunOptions opts;
    opts.max_iter = 100;
    opts.eps = 1e-12;
    Eigen::VectorXd b0 = gaussian_vector(3, rng);
    IterationTrace trace = run_iteration(scheme, b0, opts);
    CHECK(trace.steps == 1);
    CHECK(trace.stop_reason == StopReason::residual_below);
    CHECK((trace.iterates[1] - b0).norm() < 1e-12);
}

TEST_CASE("asymptotic regularity: converged runs end below the threshold")
{
    ResolventScheme scheme = lasso_diag_scheme(6, 0.3, 1.0, 21);
    RunOptions opts;
    opts.max_iter = 5000;
    opts.eps = 1e-11;
    IterationTrace trace =
        run_iteration(scheme, Eigen::VectorXd::Ones(6), opts);
    REQUIRE(trace.stop_reason == StopReason::residual_below);
    CHECK(trace.residual_S.back() <= opts.eps);
    // the residual sequence decays to the stop threshold monotonically
    CHECK(trace.residual_S.front() >= trace.residual_S.back());
}

TEST_CASE("halving recursion on the unit quadratic")
{
    ResolventScheme scheme = quadratic_scheme(
        Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1),
        Eigen::MatrixXd::Identity(1, 1));
    RunOptions opts;
    opts.max_iter = 10;
    opts.eps = 1e-14;
    Eigen::VectorXd b0(1);
    b0 << 2.0;
    IterationTrace trace = run_iteration(scheme, b0, opts);
    REQUIRE(trace.steps >= 4);
    CHECK(trace.iterates[1](0) == doctest::Approx(1.0));
    CHECK(trace.iterates[2](0) == doctest::Approx(0.5));
    CHECK(trace.iterates[3](0) == doctest::Approx(0.25));
}

TEST_CASE("divergence guard trips on an inadmissible relaxation")
{
    ResolventScheme scheme = quadratic_scheme(
        Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
        Eigen::MatrixXd::Identity(2, 2), 6.0);
    RunOptions opts;
    opts.max_iter = 500;
    opts.eps = 1e-12;
    IterationTrace trace =
        run_iteration(scheme, Eigen::Vector2d(1, 1), opts);
    CHECK(trace.stop_reason == StopReason::divergence_guard);
}

TEST_CASE("compute_reference")
{
    std::mt19937_64 rng = make_rng(2);
    SUBCASE("affine zero by direct solve")
    {
        Eigen::MatrixXd h = random_spd(4, rng, 0.5, 2.0);
        Eigen::VectorXd v = gaussian_vector(4, rng);
        // A x = H x - v has zero H^{-1} v
        ResolventScheme scheme = quadratic_scheme(
            h, -v, Eigen::MatrixXd::Identity(4, 4));
        Eigen::VectorXd ref =
            compute_reference(scheme, Eigen::VectorXd::Zero(4));
        CHECK((h * ref - v).norm() < 1e-9);
    }
    SUBCASE("zero operator returns the hint")
    {
        MonotoneBlockOperator op =
            MonotoneBlockOperator::from_blocks({ProxFn::zero(2)});
        ResolventScheme scheme = ResolventScheme::make(
            op, classify_metric(Eigen::Matrix2d::Identity()));
        Eigen::Vector2d hint(3, -1);
        CHECK((compute_reference(scheme, hint) - hint).norm() == 0.0);
    }
    SUBCASE("long-run reference on soft thresholding certifies")
    {
        ResolventScheme scheme = lasso_diag_scheme(8, 0.3, 1.0, 33);
        Eigen::VectorXd ref =
            compute_reference(scheme, Eigen::VectorXd::Zero(8));
        ApplyResult res = scheme.apply_T_certified(ref);
        CHECK(res.selection.norm() <= 1e-10 * (1.0 + ref.norm()));
    }
}

TEST_CASE("trace CSV is deterministic and well-formed")
{
    ResolventScheme scheme = lasso_diag_scheme(5, 0.2, 1.0, 44);
    RunOptions opts;
    opts.max_iter = 25;
    opts.eps = 1e-14;
    opts.reference = compute_reference(scheme, Eigen::VectorXd::Zero(5));
    IterationTrace t1 = run_iteration(scheme, Eigen::VectorXd::Ones(5), opts);
    IterationTrace t2 = run_iteration(scheme, Eigen::VectorXd::Ones(5), opts);
    std::string csv1 = trace_csv_string(t1);
    std::string csv2 = trace_csv_string(t2);
    CHECK(csv1 == csv2);
    CHECK(csv1.substr(0, csv1.find('\n')) ==
          "k,res_S,res_Q,objective,ergodic_objective,dist_ref");
    // one row per recorded index plus the header
    int rows = static_cast<int>(std::count(csv1.begin(), csv1.end(), '\n'));
    CHECK(rows == t1.steps + 2);
}

TEST_CASE("pairwise accumulator is exact on representable sums")
{
    PairwiseAccumulator acc;
    for (int i = 1; i <= 100; ++i)
        acc.add(Eigen::VectorXd::Constant(2, static_cast<double>(i)));
    CHECK(acc.count() == 100);
    CHECK(acc.sum()(0) == doctest::Approx(5050.0).epsilon(1e-15));
}

TEST_CASE("rate bound values and validity")
{
    std::map<std::string, double> c;
    c["dist0_Q"] = 3.0;
    c["norm_Q"] = 2.0;
    c["mu"] = 0.0;
    c["gamma"] = 1.0;

    RateBound picard{RateFormula::picard_sequential, c};
    CHECK(picard.at(0) == doctest::Approx(3.0));
    CHECK(picard.at(3) == doctest::Approx(1.5));

    RateBound km{RateFormula::km_sequential, c};
    for (int k : {0, 1, 5, 100})
        CHECK(km.at(k) == doctest::Approx(picard.at(k)));

    RateBound qlin{RateFormula::q_linear_distance, c};
    CHECK(qlin.at(0) == doctest::Approx(3.0));
    CHECK(qlin.at(50) == doctest::Approx(3.0)); // mu = 0: vacuous rate 1

    SUBCASE("objective formulas start at k = 1")
    {
        RateBound obj{RateFormula::objective_nonergodic, c};
        CHECK_THROWS_AS(obj.at(0), Error);
        CHECK(obj.at(1) == doctest::Approx(4.5));
    }
    SUBCASE("strong objective requires mu > 0 and matches the chain identity")
    {
        auto cs = c;
        cs["mu"] = 0.7;
        RateBound strong{RateFormula::strong_objective, cs};
        RateBound nonerg{RateFormula::objective_nonergodic, cs};
        // mu/(2Q) * Q/mu * d^2 = d^2/2 at k = 1
        CHECK(strong.at(1) == doctest::Approx(nonerg.at(1)));
        RateBound invalid{RateFormula::strong_objective, c};
        CHECK_THROWS_AS(invalid.at(5), Error);
    }
    SUBCASE("km r-linear refuses gamma near one")
    {
        auto cs = c;
        cs["mu"] = 2.0;
        cs["gamma"] = 0.99;
        RateBound b{RateFormula::km_r_linear, cs};
        CHECK_THROWS_WITH_AS(b.at(100), doctest::Contains("not applicable"),
                             Error);
    }
    SUBCASE("r-linear residual local threshold is honored")
    {
        auto cs = c;
        cs["mu"] = 0.05; // below (sqrt5-1)/4 * norm_Q
        RateBound b{RateFormula::r_linear_residual, cs};
        CHECK_FALSE(b.valid_at(0));
        double thr = std::log(0.5 * (1 + std::sqrt(5.0))) /
                         std::log(std::sqrt(1.0 + 2.0 * 0.05 / 2.0)) -
                     1.0;
        CHECK(b.valid_at(static_cast<int>(std::ceil(thr)) + 1));
    }
    SUBCASE("bounds are non-increasing in k inside validity")
    {
        auto cs = c;
        cs["mu"] = 1.1;
        cs["gamma"] = 0.8;
        cs["dist0_S"] = 3.0;
        cs["lambda_max_S"] = 2.0;
        cs["lambda_min_MGM"] = 0.5;
        for (RateFormula f : all_rate_formulas()) {
            RateBound b{f, cs};
            double prev = std::numeric_limits<double>::infinity();
            for (int k = 0; k <= 200; ++k) {
                if (!b.valid_at(k)) continue;
                double v = b.at(k);
                CHECK(v <= prev + 1e-12);
                prev = v;
            }
        }
    }
}

TEST_CASE("scalar-metric consistency of the corrected-scheme bound")
{
    // with M = I and Q = c I the spectral ratio collapses to one and the
    // corrected bound coincides with the plain sequential bound
    std::mt19937_64 rng = make_rng(9);
    double c = 1.7;
    ResolventScheme scheme = quadratic_scheme(
        random_spd(4, rng, 0.5, 2.0), gaussian_vector(4, rng),
        c * Eigen::MatrixXd::Identity(4, 4));
    Eigen::VectorXd ref = compute_reference(scheme, Eigen::VectorXd::Zero(4));
    Eigen::VectorXd b0 = gaussian_vector(4, rng);
    RateBound gen = make_rate_bound(RateFormula::generalized_sequential,
                                    scheme, b0, ref);
    RateBound pic =
        make_rate_bound(RateFormula::picard_sequential, scheme, b0, ref);
    CHECK(gen.constants["lambda_max_S"] ==
          doctest::Approx(gen.constants["lambda_min_MGM"]).epsilon(1e-12));
    for (int k : {0, 1, 7, 100})
        CHECK(gen.at(k) == doctest::Approx(pic.at(k)).epsilon(1e-12));
}

TEST_CASE("ergodic and last-iterate objective bounds share one formula")
{
    std::map<std::string, double> c;
    c["dist0_Q"] = 2.0;
    RateBound erg{RateFormula::objective_ergodic, c};
    RateBound non{RateFormula::objective_nonergodic, c};
    for (int k = 1; k <= 50; ++k) CHECK(erg.at(k) == non.at(k));
}

TEST_CASE("picard sequential bound holds on a strongly convex quadratic")
{
    std::mt19937_64 rng = make_rng(3);
    Eigen::MatrixXd h = random_spd(6, rng, 0.5, 3.0);
    Eigen::VectorXd v = gaussian_vector(6, rng);
    ResolventScheme scheme =
        quadratic_scheme(h, -v, random_spd(6, rng, 0.5, 2.0));
    Eigen::VectorXd ref = compute_reference(scheme, Eigen::VectorXd::Zero(6));

    RunOptions opts;
    opts.max_iter = 300;
    opts.eps = 1e-15;
    opts.reference = ref;
    Eigen::VectorXd b0 = 2.0 * gaussian_vector(6, rng);
    IterationTrace trace = run_iteration(scheme, b0, opts);

    RateBound bound =
        make_rate_bound(RateFormula::picard_sequential, scheme, b0, ref);
    RateReport rep = check_trace(bound, trace, scheme);
    CHECK(rep.pass);
    CHECK(rep.checked == trace.steps);
    CHECK(rep.worst_slack >= 0.0);

    SUBCASE("q-linear distance decay within the strong-monotonicity rate")
    {
        RateBound qlin =
            make_rate_bound(RateFormula::q_linear_distance, scheme, b0, ref);
        RateReport qrep = check_trace(qlin, trace, scheme);
        CHECK(qrep.pass);
    }
    SUBCASE("falsified constant is caught")
    {
        RateBound bad = bound;
        bad.constants["dist0_Q"] *= 0.5;
        RateReport brep = check_trace(bad, trace, scheme);
        CHECK_FALSE(brep.pass);
        CHECK_FALSE(brep.violations.empty());
    }
}

TEST_CASE("objective rates and the decrease bracket on soft thresholding")
{
    ResolventScheme scheme = lasso_diag_scheme(10, 0.25, 1.3, 55);
    Eigen::VectorXd ref =
        compute_reference(scheme, Eigen::VectorXd::Zero(10));
    double h_star = *scheme.op().objective_value(ref);

    RunOptions opts;
    opts.max_iter = 400;
    opts.eps = 1e-15;
    opts.reference = ref;
    Eigen::VectorXd b0 = Eigen::VectorXd::Ones(10);
    IterationTrace trace = run_iteration(scheme, b0, opts);
    REQUIRE(trace.objective.size() == static_cast<std::size_t>(trace.steps) + 1);

    for (RateFormula f :
         {RateFormula::objective_nonergodic, RateFormula::objective_ergodic}) {
        RateBound bound = make_rate_bound(f, scheme, b0, ref, h_star);
        RateReport rep = check_trace(bound, trace, scheme);
        CAPTURE(to_string(f));
        CHECK(rep.pass);
        CHECK(rep.checked == trace.steps);
    }

    TraceCheckReport bracket = check_seq_decrease_bracket(trace, scheme);
    CHECK(bracket.pass);
    CHECK(bracket.checked == trace.steps - 1);

    TraceCheckReport mono = check_residual_q_monotone(trace);
    CHECK(mono.pass);
    CHECK(trace.residual_q_defects == 0);
}

TEST_CASE("fejer contraction along a plain run")
{
    std::mt19937_64 rng = make_rng(4);
    Eigen::MatrixXd h = random_spd(5, rng, 0.4, 2.0);
    Eigen::VectorXd v = gaussian_vector(5, rng);
    ResolventScheme scheme =
        quadratic_scheme(h, -v, random_spd(5, rng, 0.5, 2.0));
    Eigen::VectorXd ref = compute_reference(scheme, Eigen::VectorXd::Zero(5));
    RunOptions opts;
    opts.max_iter = 150;
    opts.eps = 1e-15;
    IterationTrace trace =
        run_iteration(scheme, gaussian_vector(5, rng), opts);
    TraceCheckReport fejer = check_fejer_S(trace, scheme, ref);
    CHECK(fejer.pass);
    TraceCheckReport dec = check_residual_decrease_S(trace, scheme);
    CHECK(dec.pass);
}
