#include <doctest.h>

#include <cmath>
#include <functional>
#include <memory>
#include <numeric>

#include "cpkit/conformal.hpp"
#include "cpkit/errors.hpp"
#include "cpkit/normal.hpp"
#include "cpkit/synth.hpp"
#include "cpkit/theory.hpp"
#include "oracles.hpp"

using namespace cpkit;

namespace {

LengthCurve curve_from(const std::function<double(double)>& f, double lo, double hi,
                       int points, const char* tag) {
    LengthCurve c;
    c.provenance = tag;
    for (int i = 0; i < points; ++i) {
        const double level = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
        c.levels.push_back(level);
        c.lengths.push_back(f(level));
    }
    return c;
}

// Mean set length of the absolute-residual score when the residual is a
// symmetric two-sided mixture centered at +-mu: quantile ~ mu + probit(c).
double mixture_length(double mu, double c) {
    return 2.0 * (mu + oracle::inv_normal_bisect(c));
}

// Same for a standard normal residual: quantile = probit((1 + c) / 2).
double gaussian_length(double c) {
    return 2.0 * oracle::inv_normal_bisect((1.0 + c) / 2.0);
}

CalibratedPredictor predictor_with_scores(std::vector<double> targets) {
    Dataset calib;
    calib.task = TaskType::Regression;
    for (double y : targets) {
        Sample s;
        s.features = {0.0};
        s.target = y;
        calib.samples.push_back(std::move(s));
    }
    auto model = std::make_shared<FittedModel>(FittedModel{LinearMean{{0.0}, 0.0}, 0.0});
    return calibrate(model, ScoreFn::abs_residual(), calib);
}

} // namespace

TEST_SUITE_BEGIN("theory");

TEST_CASE("probit is exact at the median and matches bisection elsewhere") {
    CHECK(std_normal_inv_cdf(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(std::abs(std_normal_inv_cdf(0.95) - 1.6448536) < 1e-6);
    CHECK(std::abs(std_normal_inv_cdf(0.95) - oracle::inv_normal_bisect(0.95)) < 1e-9);
    for (double u : {1e-6, 1e-3, 0.2, 0.77, 1 - 1e-3, 1 - 1e-6}) {
        CHECK(std::abs(std_normal_inv_cdf(u) - oracle::inv_normal_bisect(u)) < 1e-8);
    }
}

TEST_CASE("normal cdf is symmetric") {
    for (double z : {0.5, 1.0, 2.0, 5.0}) {
        CHECK(std::abs(std_normal_cdf(-z) + std_normal_cdf(z) - 1.0) < 1e-12);
    }
}

TEST_CASE("probit inverts the cdf to 1e-9") {
    for (int i = 0; i <= 1000; ++i) {
        const double u = 1e-6 + (1.0 - 2e-6) * static_cast<double>(i) / 1000.0;
        CHECK(std::abs(std_normal_cdf(std_normal_inv_cdf(u)) - u) <= 1e-9);
    }
    CHECK_THROWS_AS(std_normal_inv_cdf(0.0), DomainError);
    CHECK_THROWS_AS(std_normal_inv_cdf(1.0), DomainError);
}

TEST_CASE("empirical curve value matches direct index arithmetic") {
    std::vector<double> scores(99);
    std::iota(scores.begin(), scores.end(), 1.0);
    const CalibratedPredictor cp = predictor_with_scores(scores);
    const double grid[] = {0.85, 0.9, 0.95};
    const LengthCurve curve = build_length_curve(cp, grid);
    // Level 0.9 with the finite-sample correction: the sort oracle gives the
    // interval half-width directly.
    const double expected =
        2.0 * oracle::quantile_sort_index(scores, 0.9 * (1.0 + 1.0 / 99.0));
    CHECK(curve.at(0.9) == expected);
}

TEST_CASE("identical scores give a flat curve") {
    const CalibratedPredictor cp = predictor_with_scores(std::vector<double>(40, 5.0));
    const double grid[] = {0.6, 0.7, 0.8, 0.9};
    const LengthCurve curve = build_length_curve(cp, grid);
    for (double len : curve.lengths) CHECK(len == 10.0);
}

TEST_CASE("curves from random calibrations are nondecreasing") {
    RngStream rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> targets(60);
        for (double& t : targets) t = rng.uniform() * 30 - 15;
        const CalibratedPredictor cp = predictor_with_scores(targets);
        const LengthCurve curve = build_length_curve(cp, default_level_grid());
        for (std::size_t i = 1; i < curve.lengths.size(); ++i) {
            CHECK(curve.lengths[i] >= curve.lengths[i - 1]);
        }
    }
}

TEST_CASE("general condition finds a winning keep probability on the mixture curve") {
    const LengthCurve curve =
        curve_from([](double c) { return mixture_length(20.0, c); }, 0.5, 0.995, 200, "analytic");
    const double p_grid[] = {0.92, 0.96, 0.98};
    const auto best = check_general_condition(curve, 0.1, p_grid);
    REQUIRE(best.has_value());
    // p = 0.96: 0.96 * L(0.9375) = 41.345 < L(0.9) = 42.563.
    CHECK(0.96 * curve.at(0.9375) == doctest::Approx(41.345).epsilon(1e-3));
    CHECK(curve.at(0.9) == doctest::Approx(42.563).epsilon(1e-3));
}

TEST_CASE("general condition finds nothing on the pure gaussian curve") {
    const LengthCurve curve =
        curve_from(gaussian_length, 0.5, 0.995, 200, "analytic");
    std::vector<double> p_grid;
    for (double p = 0.905; p < 0.9995; p += 0.01) p_grid.push_back(p);
    CHECK_FALSE(check_general_condition(curve, 0.1, p_grid).has_value());
}

TEST_CASE("every keep probability wins on a flat curve") {
    // Constant residuals: p * K < K for all p < 1, minimized at the
    // smallest grid value.
    const LengthCurve flat = curve_from([](double) { return 6.0; }, 0.5, 0.995, 60, "analytic");
    const double p_grid[] = {0.92, 0.95, 0.99};
    const auto best = check_general_condition(flat, 0.1, p_grid);
    REQUIRE(best.has_value());
    CHECK(*best == 0.92);
}

TEST_CASE("keep probability 1 is rejected from the grid") {
    const LengthCurve curve =
        curve_from([](double c) { return mixture_length(20.0, c); }, 0.5, 0.995, 100, "analytic");
    const double bad[] = {1.0};
    CHECK_THROWS_AS(check_general_condition(curve, 0.1, bad), DomainError);
}

TEST_CASE("first-order condition holds on the mixture curve") {
    const LengthCurve curve =
        curve_from([](double c) { return mixture_length(20.0, c); }, 0.5, 0.995, 496, "analytic");
    CHECK(check_first_order(curve, 0.1, 0.01) == ConditionVerdict::Holds);

    // Pinned numbers: lhs = L(0.9)/0.9 = 47.29 against derivative
    // 2 / pdf(probit(0.9)) = 11.40.
    const double lhs = curve.at(0.9) / 0.9;
    const double derivative = (curve.at(0.91) - curve.at(0.89)) / 0.02;
    CHECK(lhs == doctest::Approx(47.2923).epsilon(0.02));
    CHECK(derivative ==
          doctest::Approx(2.0 / oracle::normal_pdf(oracle::inv_normal_bisect(0.9))).epsilon(0.02));
    CHECK(derivative == doctest::Approx(11.3975).epsilon(0.02));
}

TEST_CASE("first-order condition fails on the pure gaussian curve") {
    const LengthCurve curve = curve_from(gaussian_length, 0.5, 0.995, 496, "analytic");
    CHECK(check_first_order(curve, 0.1, 0.01) == ConditionVerdict::Fails);

    const double lhs = curve.at(0.9) / 0.9;
    const double derivative = (curve.at(0.91) - curve.at(0.89)) / 0.02;
    CHECK(lhs == doctest::Approx(3.6552).epsilon(0.02));
    // Analytic slope: 1 / pdf(probit(0.95)).
    CHECK(derivative ==
          doctest::Approx(1.0 / oracle::normal_pdf(oracle::inv_normal_bisect(0.95))).epsilon(0.02));
    CHECK(derivative == doctest::Approx(9.6959).epsilon(0.02));
}

TEST_CASE("constant curves trivially satisfy the first-order condition") {
    const LengthCurve curve = curve_from([](double) { return 7.5; }, 0.5, 0.99, 50, "analytic");
    CHECK(check_first_order(curve, 0.1, 0.01) == ConditionVerdict::Holds);
}

TEST_CASE("finite differences track the analytic slope within a percent") {
    const LengthCurve curve =
        curve_from([](double c) { return mixture_length(20.0, c); }, 0.5, 0.995, 496, "analytic");
    for (double c : {0.85, 0.9, 0.92}) {
        const double numeric = (curve.at(c + 1e-3) - curve.at(c - 1e-3)) / 2e-3;
        const double analytic = 2.0 / oracle::normal_pdf(oracle::inv_normal_bisect(c));
        CHECK(std::abs(numeric - analytic) / analytic < 0.01);
    }
}

TEST_CASE("secant condition accepts the mixture curve at the example level") {
    const LengthCurve curve =
        curve_from([](double c) { return mixture_length(20.0, c); }, 0.5, 0.995, 200, "analytic");
    const double u_grid[] = {0.9375};
    const auto witness = check_secant(curve, 0.1, u_grid);
    REQUIRE(witness.has_value());
    CHECK(witness->u == 0.9375);
    CHECK(witness->p == doctest::Approx(0.96));
    const double slope = (curve.at(0.9375) - curve.at(0.9)) / 0.0375;
    CHECK(slope == doctest::Approx(13.47).epsilon(0.01));
}

TEST_CASE("secant condition rejects the pure gaussian curve everywhere") {
    const LengthCurve curve = curve_from(gaussian_length, 0.5, 0.995, 200, "analytic");
    std::vector<double> u_grid;
    for (double u = 0.91; u < 0.996; u += 0.01) u_grid.push_back(u);
    CHECK_FALSE(check_secant(curve, 0.1, u_grid).has_value());
}

TEST_CASE("a flat continuation is accepted at every secant level") {
    LengthCurve curve = curve_from([](double) { return 4.0; }, 0.5, 0.99, 50, "analytic");
    std::vector<double> u_grid = {0.91, 0.95, 0.98};
    const auto witness = check_secant(curve, 0.1, u_grid);
    REQUIRE(witness.has_value());
    CHECK(witness->u == 0.91); // first grid level wins
}

TEST_CASE("concavity verdicts from the second-difference oracle") {
    const LengthCurve root =
        curve_from([](double c) { return std::sqrt(c); }, 0.3, 0.92, 20, "analytic");
    CHECK(check_local_concavity(root, 0.1));

    const LengthCurve convex = curve_from(gaussian_length, 0.5, 0.92, 40, "analytic");
    CHECK_FALSE(check_local_concavity(convex, 0.1));

    const LengthCurve affine =
        curve_from([](double c) { return 1.0 + 2.0 * c; }, 0.3, 0.92, 20, "analytic");
    CHECK(check_local_concavity(affine, 0.1));
}

TEST_CASE("too few points below the target coverage is an error") {
    const LengthCurve curve =
        curve_from([](double c) { return c; }, 0.895, 0.99, 12, "analytic");
    CHECK_THROWS_AS(check_local_concavity(curve, 0.1), GridTooCoarse);
}

TEST_CASE("gaussian closed forms at the pinned example") {
    const GaussianFailure g = gaussian_failure_case(0.1, 0.95);
    CHECK(g.vcp_length == doctest::Approx(2.0 * 1.6449).epsilon(1e-3));
    CHECK(g.pt_expected_length == doctest::Approx(3.6821).epsilon(1e-3));
    CHECK(g.pt_expected_length > g.vcp_length);

    // Cross-check against bisection.
    CHECK(g.vcp_length == doctest::Approx(2.0 * oracle::inv_normal_bisect(0.95)).epsilon(1e-9));
    CHECK(g.pt_expected_length ==
          doctest::Approx(2.0 * 0.95 * oracle::inv_normal_bisect(1.0 - 0.0526316 / 2.0))
              .epsilon(1e-5));
}

TEST_CASE("wrapped length converges to the base length as p approaches 1") {
    const GaussianFailure g = gaussian_failure_case(0.1, 1.0 - 1e-8);
    CHECK(std::abs(g.pt_expected_length - g.vcp_length) < 1e-6);
}

TEST_CASE("the wrapped gaussian length exceeds the base across the sweep") {
    for (double p = 0.905; p < 0.9995; p += 0.01) {
        const GaussianFailure g = gaussian_failure_case(0.1, p);
        CHECK(g.pt_expected_length > g.vcp_length);
    }
}

TEST_CASE("first-order success implies a secant witness on smooth curves") {
    const LengthCurve curve =
        curve_from([](double c) { return mixture_length(20.0, c); }, 0.5, 0.995, 200, "analytic");
    for (double alpha : {0.05, 0.1, 0.2}) {
        if (check_first_order(curve, alpha, 0.01) == ConditionVerdict::Holds) {
            std::vector<double> u_grid;
            for (double u = 1.0 - alpha + 0.005; u < 0.995; u += 0.005) u_grid.push_back(u);
            CHECK(check_secant(curve, alpha, u_grid).has_value());
        }
    }
}

TEST_CASE("empirical curves track the analytic mixture curve") {
    SynthSpec spec;
    spec.kind = SynthSpec::Kind::MixtureLinear;
    spec.beta = {1.0, -1.0};
    spec.mu = 20.0;
    spec.n = 5000;
    RngStream rng(43);
    const Dataset train = generate(spec, rng);
    const Dataset calib = generate(spec, rng);
    auto model = std::make_shared<FittedModel>(fit_linear_mean(train));
    const CalibratedPredictor cp = calibrate(model, ScoreFn::abs_residual(), calib);
    const LengthCurve curve = build_length_curve(cp, default_level_grid());
    for (double c : {0.85, 0.9, 0.95}) {
        const double analytic = mixture_length(20.0, c);
        CHECK(std::abs(curve.at(c) - analytic) / analytic < 0.03);
    }
}

TEST_CASE("per-point lengths are probe-independent for the absolute residual") {
    std::vector<double> scores(80);
    std::iota(scores.begin(), scores.end(), 0.5);
    const CalibratedPredictor cp = predictor_with_scores(scores);
    const double grid[] = {0.7, 0.8, 0.9};
    const LengthCurve one_probe = build_length_curve(cp, grid, {{0.0}});
    std::vector<std::vector<double>> many;
    RngStream rng(44);
    for (int i = 0; i < 100; ++i) many.push_back({rng.uniform() * 10 - 5});
    const LengthCurve hundred_probes = build_length_curve(cp, grid, many);
    CHECK(one_probe.lengths == hundred_probes.lengths);
}

TEST_CASE("curve csv serialization is two columns") {
    LengthCurve c;
    c.levels = {0.5, 0.9};
    c.lengths = {1.25, std::numeric_limits<double>::infinity()};
    CHECK(curve_csv(c) == "level,length\n0.5,1.25\n0.9,inf\n");
}

TEST_SUITE_END();
