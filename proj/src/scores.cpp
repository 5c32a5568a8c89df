#include "cpkit/scores.hpp"

#include <cmath>
#include <limits>

#include "cpkit/errors.hpp"

namespace cpkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double scale_at(const ScoreFn& fn, std::span<const double> x, RngStream* rng) {
    if (!fn.scale_model) throw DomainError("normalized score needs a scale model");
    const Prediction p = predict(*fn.scale_model, x, rng);
    // Two-point estimators report through .scale; regression models act as
    // their point prediction.
    return std::holds_alternative<TwoPointScale>(fn.scale_model->kind) ? p.scale : p.point;
}

} // namespace

ScoreKind score_kind_from_string(const std::string& id) {
    if (id == "abs_residual") return ScoreKind::AbsoluteResidual;
    if (id == "cqr") return ScoreKind::Cqr;
    if (id == "softmax") return ScoreKind::SoftmaxProb;
    if (id == "normalized") return ScoreKind::NormalizedResidual;
    throw ConfigError("unknown score kind '" + id + "'");
}

std::string to_string(ScoreKind kind) {
    switch (kind) {
    case ScoreKind::AbsoluteResidual: return "abs_residual";
    case ScoreKind::Cqr: return "cqr";
    case ScoreKind::SoftmaxProb: return "softmax";
    case ScoreKind::NormalizedResidual: return "normalized";
    }
    return "?";
}

double score(const ScoreFn& fn, std::span<const double> x, double y,
             const FittedModel& model, RngStream* rng) {
    switch (fn.kind) {
    case ScoreKind::AbsoluteResidual:
        return std::abs(y - predict(model, x).point);
    case ScoreKind::Cqr: {
        const Prediction p = predict(model, x);
        return std::max(p.q_lo - y, y - p.q_hi);
    }
    case ScoreKind::NormalizedResidual: {
        const double sigma = scale_at(fn, x, rng);
        if (sigma <= 0.0) throw ScaleUnderflow("scale estimate is <= 0");
        return std::abs(y - predict(model, x).point) / sigma;
    }
    case ScoreKind::SoftmaxProb:
        throw DomainError("softmax score expects a class label");
    }
    throw DomainError("unreachable score kind");
}

double score(const ScoreFn& fn, std::span<const double> x, int label,
             const FittedModel& model) {
    if (fn.kind != ScoreKind::SoftmaxProb) {
        throw DomainError("label scoring is only defined for the softmax score");
    }
    const Prediction p = predict(model, x);
    if (label < 0 || label >= static_cast<int>(p.probs.size())) {
        throw DomainError("label out of range");
    }
    return 1.0 - p.probs[static_cast<std::size_t>(label)];
}

PredictionSet invert(const ScoreFn& fn, std::span<const double> x, double threshold,
                     const FittedModel& model, RngStream* rng) {
    if (std::isnan(threshold)) throw DomainError("threshold must not be NaN");
    switch (fn.kind) {
    case ScoreKind::AbsoluteResidual: {
        if (threshold < 0.0) return PredictionSet::null_set();
        const double mu = predict(model, x).point;
        if (threshold == kInf) return PredictionSet::full_line();
        return PredictionSet::interval(mu - threshold, mu + threshold);
    }
    case ScoreKind::Cqr: {
        if (threshold == kInf) return PredictionSet::full_line();
        const Prediction p = predict(model, x);
        const double lo = p.q_lo - threshold;
        const double hi = p.q_hi + threshold;
        if (lo > hi) return PredictionSet::null_set(); // negative threshold ate the band
        return PredictionSet::interval(lo, hi);
    }
    case ScoreKind::NormalizedResidual: {
        const double mu = predict(model, x).point;
        const double sigma = scale_at(fn, x, rng);
        // A zero scale is the vanishing-scale limit: the set collapses to
        // the point prediction for any threshold.
        if (sigma == 0.0) return PredictionSet::singleton(mu);
        if (sigma < 0.0) throw ScaleUnderflow("scale estimate is < 0");
        if (threshold < 0.0) return PredictionSet::null_set();
        if (threshold == kInf) return PredictionSet::full_line();
        return PredictionSet::interval(mu - threshold * sigma, mu + threshold * sigma);
    }
    case ScoreKind::SoftmaxProb: {
        const Prediction p = predict(model, x);
        std::vector<int> kept;
        for (int k = 0; k < static_cast<int>(p.probs.size()); ++k) {
            if (1.0 - p.probs[static_cast<std::size_t>(k)] <= threshold) kept.push_back(k);
        }
        return PredictionSet::label_set(std::move(kept));
    }
    }
    throw DomainError("unreachable score kind");
}

} // namespace cpkit
