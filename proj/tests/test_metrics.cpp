#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "cpkit/errors.hpp"
#include "cpkit/metrics.hpp"
#include "cpkit/synth.hpp"
#include "oracles.hpp"

using namespace cpkit;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Dataset gaussian_test(std::size_t n, std::uint64_t seed, bool with_groups = false) {
    SynthSpec spec;
    spec.kind = SynthSpec::Kind::GaussianLinear;
    spec.beta = {1.0, -1.0};
    spec.n = n;
    RngStream rng(seed);
    Dataset d = generate(spec, rng);
    if (with_groups) {
        for (Sample& s : d.samples) s.group = s.features[0] >= 0 ? "pos" : "neg";
    }
    return d;
}

// Wrapper-shaped randomized predictor: measure-zero set with probability
// 1 - p, an interval of fixed width otherwise.
Predictor coin_predictor(double p, double width) {
    return [p, width](std::span<const double>, RngStream& rng) {
        if (rng.uniform() > p) return PredictionSet::singleton(0.0);
        return PredictionSet::interval(-width / 2.0, width / 2.0);
    };
}

} // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("a full-line predictor covers everything at infinite length") {
    const Predictor full = [](std::span<const double>, RngStream&) {
        return PredictionSet::full_line();
    };
    RngStream rng(1);
    const AuditReport r = evaluate(full, gaussian_test(200, 11), Level(0.1), rng);
    CHECK(r.coverage == 1.0);
    CHECK(r.mean_length == kInf);
    CHECK(r.n_test == 200);
}

TEST_CASE("a point predictor never covers continuous noise") {
    const Predictor point = [](std::span<const double> x, RngStream&) {
        return PredictionSet::singleton(x[0] - x[1]);
    };
    RngStream rng(2);
    const AuditReport r = evaluate(point, gaussian_test(200, 12), Level(0.1), rng);
    CHECK(r.coverage == 0.0);
    CHECK(r.mean_length == 0.0);
}

TEST_CASE("wrapped conformal prediction reaches the target coverage") {
    SynthSpec spec;
    spec.kind = SynthSpec::Kind::MixtureLinear;
    spec.beta = {1.0, -1.0};
    spec.mu = 20.0;
    spec.n = 2000;
    RngStream rng(13);
    const Dataset train = generate(spec, rng);
    const Dataset calib = generate(spec, rng);
    spec.n = 10'000;
    RngStream test_rng(14);
    const Dataset test = generate(spec, test_rng);

    auto model = std::make_shared<FittedModel>(fit_linear_mean(train));
    const CalibratedPredictor base = calibrate(model, ScoreFn::abs_residual(), calib);
    PTPredictor pt{base, PTConfig{0.95, PTConfig::Mode::NullSet, 0.0, 0.1}};
    RngStream eval(15);
    const AuditReport r = evaluate(make_pt_predictor(pt), test, Level(0.1), eval);
    CHECK(std::abs(r.coverage - 0.90) < 0.01);
}

TEST_CASE("group coverage is reported per tag with its minimum") {
    const Predictor biased = [](std::span<const double> x, RngStream&) {
        // Wide for positive first feature, narrow otherwise.
        const double w = x[0] >= 0 ? 50.0 : 0.5;
        return PredictionSet::interval(-w, w);
    };
    RngStream rng(3);
    const AuditReport r = evaluate(biased, gaussian_test(2000, 16, true), Level(0.1), rng);
    REQUIRE(r.group_coverage.count("pos"));
    REQUIRE(r.group_coverage.count("neg"));
    CHECK(r.group_coverage.at("pos") > r.group_coverage.at("neg"));
    CHECK(r.min_group_coverage == doctest::Approx(r.group_coverage.at("neg")));
    CHECK(r.min_group_coverage <= r.coverage);
}

TEST_CASE("evaluation of a disjoint union is the size-weighted average") {
    const Predictor fixed = [](std::span<const double> x, RngStream&) {
        return PredictionSet::interval(x[0] - 1.0, x[0] + 2.0);
    };
    const Dataset a = gaussian_test(300, 17);
    const Dataset b = gaussian_test(500, 18);
    Dataset both = a;
    both.samples.insert(both.samples.end(), b.samples.begin(), b.samples.end());

    RngStream r1(4), r2(4), r3(4);
    const AuditReport ra = evaluate(fixed, a, Level(0.1), r1);
    const AuditReport rb = evaluate(fixed, b, Level(0.1), r2);
    const AuditReport rboth = evaluate(fixed, both, Level(0.1), r3);
    const double na = 300, nb = 500;
    CHECK(rboth.coverage ==
          doctest::Approx((na * ra.coverage + nb * rb.coverage) / (na + nb)).epsilon(1e-12));
    CHECK(rboth.mean_length ==
          doctest::Approx((na * ra.mean_length + nb * rb.mean_length) / (na + nb)).epsilon(1e-12));
}

TEST_CASE("deterministic predictors have exactly zero stability") {
    SynthSpec spec;
    spec.kind = SynthSpec::Kind::GaussianLinear;
    spec.beta = {1.0, -1.0};
    spec.n = 500;
    RngStream rng(19);
    const Dataset train = generate(spec, rng);
    const Dataset calib = generate(spec, rng);
    const Dataset test = generate(spec, rng);
    auto model = std::make_shared<FittedModel>(fit_linear_mean(train));
    const CalibratedPredictor cp = calibrate(model, ScoreFn::abs_residual(), calib);
    RngStream stab(20);
    CHECK(interval_stability(make_vcp_predictor(cp, Level(0.1)), test, Level(0.1), 100, stab) ==
          0.0);
}

TEST_CASE("coin-flip predictors match the closed-form stability") {
    // Measure distribution: width L' = 2 with probability p, zero otherwise;
    // the variance is p(1-p)L'^2 = 0.19.
    const Dataset test = gaussian_test(200, 21);
    RngStream stab(22);
    const double is = interval_stability(coin_predictor(0.95, 2.0), test, Level(0.1), 1000, stab);
    CHECK(std::abs(is - 0.19) < 0.02);
    CHECK(stability_closed_form(0.95, 2.0) == doctest::Approx(0.19));
}

TEST_CASE("degenerate keep probabilities have zero stability") {
    const Dataset test = gaussian_test(50, 23);
    RngStream stab(24);
    CHECK(interval_stability(coin_predictor(1.0, 2.0), test, Level(0.1), 100, stab) == 0.0);
    CHECK(stability_closed_form(1.0, 123.0) == 0.0);
}

TEST_CASE("closed-form stability values") {
    CHECK(stability_closed_form(0.95, 36.0) == doctest::Approx(61.56));
    CHECK(stability_closed_form(0.5, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("infinite measures poison the stability estimate") {
    const Predictor sometimes_infinite = [](std::span<const double>, RngStream& rng) {
        if (rng.uniform() < 0.5) return PredictionSet::full_line();
        return PredictionSet::interval(0.0, 1.0);
    };
    const Dataset test = gaussian_test(10, 25);
    RngStream stab(26);
    CHECK_THROWS_AS(interval_stability(sometimes_infinite, test, Level(0.1), 50, stab),
                    InfiniteMeasure);
}

TEST_CASE("stability estimates are seed-stable") {
    const Dataset test = gaussian_test(150, 27);
    RngStream s1(100), s2(200);
    const double a = interval_stability(coin_predictor(0.9, 3.0), test, Level(0.1), 400, s1);
    const double b = interval_stability(coin_predictor(0.9, 3.0), test, Level(0.1), 400, s2);
    // Var of a per-point sample variance of ~Bernoulli measures, averaged
    // over points; 4 se is a loose but honest gate.
    const double truth = stability_closed_form(0.9, 3.0);
    const double se = truth * 0.13 / std::sqrt(150.0); // ~13% per-point relative sd
    CHECK(std::abs(a - b) < 4 * se * std::sqrt(2.0));
}

TEST_CASE("conditionally exact bases land on the improvement boundary") {
    MiscoverageCurve identity;
    for (int i = 0; i <= 100; ++i) {
        identity.alpha_grid.push_back(i / 100.0);
        identity.values.push_back(i / 100.0);
    }
    CHECK(conditional_coverage_condition(identity, 0.2, 0.95) == CoverageVerdict::Improves);
}

TEST_CASE("convex miscoverage curves fail the improvement condition") {
    MiscoverageCurve square;
    for (int i = 0; i <= 100; ++i) {
        const double a = i / 100.0;
        square.alpha_grid.push_back(a);
        square.values.push_back(a * a);
    }
    // f(0.2) - 0.95 f(0.157895) = 0.04 - 0.95 * 0.024931 = 0.016316 < 0.05.
    CHECK(conditional_coverage_condition(square, 0.2, 0.95) == CoverageVerdict::NoGuarantee);
}

TEST_CASE("concave miscoverage curves pass the improvement condition") {
    MiscoverageCurve root;
    for (int i = 0; i <= 400; ++i) {
        const double a = i / 400.0;
        root.alpha_grid.push_back(a);
        root.values.push_back(std::sqrt(a));
    }
    // f(0.2) - 0.95 f(0.157895) = 0.44721 - 0.37749 = 0.06973 >= 0.05.
    CHECK(conditional_coverage_condition(root, 0.2, 0.95) == CoverageVerdict::Improves);
}

TEST_CASE("levels outside the tabulated grid are an error") {
    // alpha' = 1 - 0.8/0.95 = 0.158 falls below this grid's low edge.
    MiscoverageCurve narrow;
    narrow.alpha_grid = {0.18, 0.2, 0.25};
    narrow.values = {0.18, 0.2, 0.25};
    CHECK_THROWS_AS(conditional_coverage_condition(narrow, 0.2, 0.95), GridTooCoarse);
}

TEST_CASE("empirical miscoverage curves feed the checker") {
    SynthSpec spec;
    spec.kind = SynthSpec::Kind::GaussianLinear;
    spec.beta = {1.0, -1.0};
    spec.n = 2000;
    RngStream rng(28);
    const Dataset calib = generate(spec, rng);
    const Dataset test = generate(spec, rng);
    auto oracle_model =
        std::make_shared<FittedModel>(FittedModel{LinearMean{{1.0, -1.0}, 0.0}, 0.0});
    const CalibratedPredictor cp = calibrate(oracle_model, ScoreFn::abs_residual(), calib);

    std::vector<double> grid;
    for (int i = 1; i <= 50; ++i) grid.push_back(i / 100.0);
    const MiscoverageCurve f = estimate_miscoverage_curve(cp, test.samples, grid);
    // The oracle base is conditionally exact, so its curve hugs the identity.
    CHECK(std::abs(f.at(0.1) - 0.1) < 0.03);
    CHECK(std::abs(f.at(0.25) - 0.25) < 0.04);
    CHECK(std::abs(f.at(0.4) - 0.4) < 0.04);
}

TEST_CASE("wrapper coverage reconciles with its meaningful-branch coverage") {
    SynthSpec spec;
    spec.kind = SynthSpec::Kind::MixtureLinear;
    spec.beta = {1.0, -1.0};
    spec.mu = 10.0;
    spec.n = 1500;
    RngStream rng(29);
    const Dataset train = generate(spec, rng);
    const Dataset calib = generate(spec, rng);
    spec.n = 8000;
    RngStream trng(30);
    const Dataset test = generate(spec, trng);
    auto model = std::make_shared<FittedModel>(fit_linear_mean(train));
    const CalibratedPredictor base = calibrate(model, ScoreFn::abs_residual(), calib);
    const double p = 0.95;
    PTPredictor pt{base, PTConfig{p, PTConfig::Mode::NullSet, 0.0, 0.1}};

    RngStream eval(31);
    std::size_t hits = 0, meaningful = 0, meaningful_hits = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        RngStream draw = eval.child(i);
        const PredictionSet s = pt_predict(pt, test.samples[i].features, draw);
        const bool hit = s.contains(test.samples[i].target);
        hits += hit;
        if (s.measure() > 0.0) {
            ++meaningful;
            meaningful_hits += hit;
        }
    }
    const double n = static_cast<double>(test.size());
    const double coverage = hits / n;
    const double branch_product =
        p * (static_cast<double>(meaningful_hits) / static_cast<double>(meaningful));
    const double se = std::sqrt(0.9 * 0.1 / n);
    CHECK(std::abs(coverage - branch_product) < 3 * se + 0.01);
}

TEST_CASE("csv row layout is stable") {
    CHECK(report_csv_header() ==
          "method,alpha,p,coverage,coverage_se,mean_length,length_se,min_group_coverage,"
          "interval_stability,stability_se,n_test,trials,seed");
    AuditReport r;
    r.method = "vcp";
    r.alpha = 0.1;
    r.p = 1.0;
    r.coverage = 0.9;
    r.coverage_se = 0.005;
    r.mean_length = kInf;
    r.length_se = kInf;
    r.min_group_coverage = 0.9;
    r.n_test = 100;
    r.trials = 5;
    r.seed = 7;
    CHECK(report_csv_row(r) == "vcp,0.1,1,0.9,0.005,inf,inf,0.9,nan,nan,100,5,7");
}

TEST_SUITE_END();
