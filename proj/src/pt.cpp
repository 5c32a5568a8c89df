#include "cpkit/pt.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "cpkit/errors.hpp"

namespace cpkit {

double adjusted_alpha(double alpha, double p) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (!(p > 1.0 - alpha && p <= 1.0)) {
        throw InvalidKeepProbability("keep probability must lie in (1 - alpha, 1]");
    }
    return 1.0 - (1.0 - alpha) / p;
}

double solve_alpha2(double alpha, double p, double alpha1) {
    if (!(alpha1 > 0.0 && alpha1 < 1.0)) throw DomainError("alpha1 must lie in (0, 1)");
    const double alpha2 = (alpha - (1.0 - p) * alpha1) / p;
    if (!(alpha2 > 0.0 && alpha2 < 1.0)) {
        throw DomainError("solved alpha2 falls outside (0, 1); adjust alpha1 or p");
    }
    return alpha2;
}

double PTConfig::meaningful_alpha() const {
    return mode == Mode::NullSet ? adjusted_alpha(target_alpha, p)
                                 : solve_alpha2(target_alpha, p, alpha1);
}

void PTConfig::validate() const {
    meaningful_alpha(); // throws on any inconsistency
}

PredictionSet null_prediction(const CalibratedPredictor& base, std::span<const double> x) {
    if (!base.score_fn.is_regression()) return PredictionSet::label_set({});
    const Prediction p = predict(*base.model, x);
    if (std::holds_alternative<LinearQuantile>(base.model->kind)) {
        return PredictionSet::singleton(0.5 * (p.q_lo + p.q_hi));
    }
    return PredictionSet::singleton(p.point);
}

PredictionSet pt_predict(const PTPredictor& pt, std::span<const double> x, RngStream& rng) {
    const PTConfig& cfg = pt.config;
    const double meaningful = cfg.meaningful_alpha();
    const double u = rng.uniform();
    if (u > cfg.p) {
        if (cfg.mode == PTConfig::Mode::TwoLevel) {
            return vcp_predict(pt.base, x, Level(cfg.alpha1));
        }
        return null_prediction(pt.base, x);
    }
    return vcp_predict(pt.base, x, Level(meaningful));
}

LocalizedEquivalence::LocalizedEquivalence(const CalibratedPredictor& base, Level level,
                                           double p, RngStream& rng)
    : base_(base), p_(p) {
    if (base.score_fn.kind != ScoreKind::AbsoluteResidual) {
        throw DomainError("localized comparison requires the absolute-residual score");
    }
    adjusted_alpha(level.alpha, p); // range check

    // Calibration-side scale draws, frozen for the lifetime of this object.
    // A zero scale pushes the normalized score to +inf, past every finite one.
    const FittedModel scale_model{TwoPointScale{p}, 0.0};
    std::vector<double> inflated;
    inflated.reserve(base.calib_scores.size());
    std::size_t zeroed = 0;
    for (double raw : base.calib_scores) {
        const double scale = predict(scale_model, {}, &rng).scale;
        if (scale == 0.0) {
            ++zeroed;
        } else {
            inflated.push_back(raw / scale);
        }
    }
    std::sort(inflated.begin(), inflated.end());
    inflated.insert(inflated.end(), zeroed, std::numeric_limits<double>::infinity());

    const double n = static_cast<double>(inflated.size());
    const double tau = (1.0 - level.alpha) * (1.0 + 1.0 / n);
    localized_threshold_ = empirical_quantile(inflated, tau);
    pt_threshold_ = vcp_threshold(base, Level(adjusted_alpha(level.alpha, p)));
}

std::pair<PredictionSet, PredictionSet>
LocalizedEquivalence::paired_draw(std::span<const double> x, RngStream& rng) const {
    const double u = rng.uniform();
    const double mu = predict(*base_.model, x).point;

    PredictionSet localized = PredictionSet::singleton(mu);
    PredictionSet wrapped = PredictionSet::singleton(mu);
    if (u <= p_) { // test-point scale 1 and the meaningful branch share the coin
        localized = invert(base_.score_fn, x, localized_threshold_, *base_.model);
        wrapped = invert(base_.score_fn, x, pt_threshold_, *base_.model);
    }
    return {localized, wrapped};
}

std::pair<PredictionSet, PredictionSet>
localized_pt_equivalence(const CalibratedPredictor& base, Level level, double p,
                         std::span<const double> x, RngStream& rng) {
    LocalizedEquivalence eq(base, level, p, rng);
    return eq.paired_draw(x, rng);
}

} // namespace cpkit
