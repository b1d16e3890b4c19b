#include <doctest.h>

#include "core/operators.hpp"
#include "core/random.hpp"
#include "oracles.hpp"

using namespace mr;

namespace {

/* prox oracle: minimize h(x) + (1/2 tau)||x - b||^2 coordinate-wise by
 * golden-section scan (only valid for separable h) */
double prox_1d_oracle(const std::function<double(double)>& h, double b,
                      double tau)
{
    auto obj = [&](double x) { return h(x) + (x - b) * (x - b) / (2.0 * tau); };
    double r = std::abs(b) + 10.0;
    return oracle::golden_minimize(obj, -r, r, 300);
}

} // namespace

TEST_CASE("soft-threshold prox of l1")
{
    ProxFn h = ProxFn::l1(1.0, 1);
    Eigen::VectorXd b(1);
    b << 2.5;
    CHECK(h.prox(b, 1.0)(0) == doctest::Approx(1.5));
    b << 0.5;
    CHECK(h.prox(b, 1.0)(0) == doctest::Approx(0.0));
    b << -3.0;
    CHECK(h.prox(b, 2.0)(0) == doctest::Approx(-1.0));

    // golden-section oracle cross-check
    auto l1abs = [](double x) { return std::abs(x); };
    for (double v : {2.5, 0.5, -0.75, 4.0})
        CHECK(h.prox(Eigen::VectorXd::Constant(1, v), 1.0)(0) ==
              doctest::Approx(prox_1d_oracle(l1abs, v, 1.0)).epsilon(1e-6));
}

TEST_CASE("quadratic prox solves the regularized system")
{
    ProxFn h = ProxFn::quadratic(Eigen::MatrixXd::Identity(1, 1),
                                 Eigen::VectorXd::Zero(1));
    Eigen::VectorXd b(1);
    b << 2.0;
    CHECK(h.prox(b, 1.0)(0) == doctest::Approx(1.0));
}

TEST_CASE("prox kinds satisfy first-order optimality")
{
    std::mt19937_64 rng = make_rng(3);
    std::vector<ProxFn> fns;
    fns.push_back(ProxFn::zero(4));
    fns.push_back(ProxFn::l1(0.7, 4));
    fns.push_back(ProxFn::squared_l2(2.0, gaussian_vector(4, rng)));
    fns.push_back(ProxFn::box_indicator(Eigen::VectorXd::Constant(4, -1.0),
                                        Eigen::VectorXd::Constant(4, 0.5)));
    fns.push_back(ProxFn::box_support(Eigen::VectorXd::Constant(4, -0.3),
                                      Eigen::VectorXd::Constant(4, 1.1)));
    fns.push_back(
        ProxFn::quadratic(random_spd(4, rng, 0.1, 2.0), gaussian_vector(4, rng)));

    for (const ProxFn& fn : fns) {
        CAPTURE(fn.describe());
        for (int t = 0; t < 25; ++t) {
            double tau = 0.1 + 2.0 * std::abs(gaussian_vector(1, rng)(0));
            Eigen::VectorXd b = 3.0 * gaussian_vector(4, rng);
            Eigen::VectorXd p = fn.prox(b, tau);
            // subgradient inequality: h(x) >= h(p) + <(b-p)/tau, x-p>
            Eigen::VectorXd g = (b - p) / tau;
            for (int s = 0; s < 10; ++s) {
                Eigen::VectorXd x = 3.0 * gaussian_vector(4, rng);
                double hx = fn.value(x);
                if (std::isinf(hx)) continue;
                CHECK(hx >= fn.value(p) + g.dot(x - p) - 1e-8);
            }
        }
    }
}

TEST_CASE("firm nonexpansiveness of every prox kind")
{
    std::mt19937_64 rng = make_rng(5);
    std::vector<ProxFn> fns;
    fns.push_back(ProxFn::l1(1.2, 6));
    fns.push_back(ProxFn::squared_l2(0.8, gaussian_vector(6, rng)));
    fns.push_back(ProxFn::box_indicator(Eigen::VectorXd::Constant(6, -0.2),
                                        Eigen::VectorXd::Constant(6, 0.9)));
    fns.push_back(ProxFn::box_support(Eigen::VectorXd::Constant(6, -1.0),
                                      Eigen::VectorXd::Constant(6, 1.0)));
    fns.push_back(
        ProxFn::quadratic(random_spd(6, rng, 0.0, 3.0), gaussian_vector(6, rng)));
    for (const ProxFn& fn : fns) {
        CAPTURE(fn.describe());
        for (int t = 0; t < 50; ++t) {
            Eigen::VectorXd b1 = 2.0 * gaussian_vector(6, rng);
            Eigen::VectorXd b2 = 2.0 * gaussian_vector(6, rng);
            Eigen::VectorXd p1 = fn.prox(b1, 1.0);
            Eigen::VectorXd p2 = fn.prox(b2, 1.0);
            double lhs = (p1 - p2).squaredNorm();
            double rhs = (p1 - p2).dot(b1 - b2);
            CHECK(lhs <= rhs + 1e-9);
        }
    }
}

TEST_CASE("scalar Moreau decomposition through the conjugate pair")
{
    std::mt19937_64 rng = make_rng(9);
    std::vector<ProxFn> fns;
    fns.push_back(ProxFn::l1(1.0, 5));
    fns.push_back(ProxFn::box_indicator(Eigen::VectorXd::Constant(5, -1.0),
                                        Eigen::VectorXd::Constant(5, 1.0)));
    fns.push_back(
        ProxFn::quadratic(random_spd(5, rng, 0.3, 2.0), gaussian_vector(5, rng)));
    fns.push_back(ProxFn::squared_l2(1.7, gaussian_vector(5, rng)));
    for (const ProxFn& fn : fns) {
        CAPTURE(fn.describe());
        ProxFn conj = fn.conjugate();
        for (int t = 0; t < 30; ++t) {
            double tau = 0.2 + std::abs(gaussian_vector(1, rng)(0));
            Eigen::VectorXd b = 2.0 * gaussian_vector(5, rng);
            Eigen::VectorXd p = fn.prox(b, tau);
            Eigen::VectorXd d = conj.prox(b / tau, 1.0 / tau);
            CHECK((p + tau * d - b).norm() < 1e-9);
        }
    }
}

TEST_CASE("l1 soft-thresholding example pair for the classic identity")
{
    ProxFn h = ProxFn::l1(1.0, 1);
    Eigen::VectorXd b(1);
    b << 2.5;
    Eigen::VectorXd p = h.prox(b, 1.0);
    Eigen::VectorXd d = h.conjugate().prox(b, 1.0);
    CHECK(p(0) == doctest::Approx(1.5));
    CHECK(d(0) == doctest::Approx(1.0)); // projection onto [-1, 1]
    CHECK(p(0) + d(0) == doctest::Approx(b(0)));
}

TEST_CASE("objective_value of block operators")
{
    SUBCASE("l1 norm")
    {
        MonotoneBlockOperator op =
            MonotoneBlockOperator::from_blocks({ProxFn::l1(1.0, 2)});
        Eigen::Vector2d x(-2, 3);
        auto v = op.objective_value(x);
        REQUIRE(v.has_value());
        CHECK(*v == doctest::Approx(5.0));
    }
    SUBCASE("quadratic potential with shift, checked by finite differences")
    {
        MonotoneBlockOperator op(
            {ProxFn::zero(2)}, Eigen::Matrix2d::Identity(),
            Eigen::Vector2d(1, 1), 0.0);
        Eigen::Vector2d x(1, 1);
        auto v = op.objective_value(x);
        REQUIRE(v.has_value());
        CHECK(*v == doctest::Approx(-1.0));

        auto f = [&](const Eigen::VectorXd& y) {
            return *op.objective_value(y);
        };
        Eigen::VectorXd g = oracle::fd_gradient(f, x);
        Eigen::VectorXd expected = x - Eigen::Vector2d(1, 1); // L x - shift
        CHECK((g - expected).norm() < 1e-6);
    }
    SUBCASE("skew coupling has no potential")
    {
        Eigen::Matrix2d skew;
        skew << 0, -1, 1, 0;
        MonotoneBlockOperator op({ProxFn::l1(1.0, 1), ProxFn::l1(1.0, 1)},
                                 skew, Eigen::Vector2d::Zero(), 0.0);
        CHECK_FALSE(op.objective_value(Eigen::Vector2d(1, 1)).has_value());
    }
}

TEST_CASE("strong monotonicity audit")
{
    SUBCASE("unit squared_l2 is 1-strongly monotone")
    {
        MonotoneBlockOperator op = MonotoneBlockOperator::from_blocks(
            {ProxFn::squared_l2(1.0, Eigen::VectorXd::Zero(3))}, 1.0);
        auto rep = op.strong_monotonicity_audit(100, 17);
        CHECK_FALSE(rep.violation);
        CHECK(rep.min_ratio >= 1.0 - 1e-8);
    }
    SUBCASE("pure skew coupling sits at zero")
    {
        Eigen::Matrix2d skew;
        skew << 0, -1, 1, 0;
        MonotoneBlockOperator op({ProxFn::zero(1), ProxFn::zero(1)}, skew,
                                 Eigen::Vector2d::Zero(), 0.0);
        auto rep = op.strong_monotonicity_audit(100, 19);
        CHECK_FALSE(rep.violation);
        CHECK(rep.min_ratio >= -1e-8);
        CHECK(rep.min_ratio <= 1e-8);
    }
    SUBCASE("quadratic spectrum brackets the sampled ratio")
    {
        Eigen::Matrix2d h = Eigen::Vector2d(2, 5).asDiagonal();
        MonotoneBlockOperator op = MonotoneBlockOperator::from_blocks(
            {ProxFn::quadratic(h, Eigen::Vector2d::Zero())}, 2.0);
        auto rep = op.strong_monotonicity_audit(200, 21);
        CHECK_FALSE(rep.violation);
        CHECK(rep.min_ratio >= 2.0 - 1e-8);
        CHECK(rep.min_ratio <= 5.0 + 1e-8);
    }
    SUBCASE("overclaimed modulus is rejected at construction")
    {
        CHECK_THROWS_AS(MonotoneBlockOperator::from_blocks(
                            {ProxFn::l1(1.0, 2)}, 0.5),
                        Error);
    }
}

TEST_CASE("prox input validation")
{
    ProxFn h = ProxFn::l1(1.0, 2);
    Eigen::VectorXd b(2);
    b << 1, 2;
    CHECK_THROWS_AS(h.prox(b, 0.0), Error);
    CHECK_THROWS_AS(h.prox(b, -1.0), Error);
    CHECK_THROWS_AS(h.prox(Eigen::VectorXd::Zero(3), 1.0), Error);
    CHECK_THROWS_AS(eval_prox(h, Eigen::VectorXd::Zero(3), 1.0), Error);
}
