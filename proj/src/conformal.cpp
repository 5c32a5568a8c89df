#include "cpkit/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpkit/errors.hpp"

namespace cpkit {

Level::Level(double a) : alpha(a) {
    if (!(a > 0.0 && a < 1.0)) throw DomainError("miscoverage rate must lie in (0, 1)");
}

double empirical_quantile(std::span<const double> sorted_scores, double tau) {
    const std::size_t n = sorted_scores.size();
    if (n == 0) throw EmptyScores("empirical quantile of an empty sample");
    if (!(tau > 0.0)) throw DomainError("quantile level must be positive");

    const double raw = (static_cast<double>(n) + 1.0) * (1.0 - tau);
    const double k = std::ceil(raw);
    if (k <= 0.0) return std::numeric_limits<double>::infinity();
    if (k > static_cast<double>(n)) return sorted_scores.front();
    // k-th largest of an ascending sample.
    return sorted_scores[n - static_cast<std::size_t>(k)];
}

CalibratedPredictor calibrate(std::shared_ptr<const FittedModel> model,
                              ScoreFn score_fn, const Dataset& calib) {
    if (calib.samples.empty()) throw EmptyScores("calibration fold is empty");
    calib.validate();
    if (score_fn.is_regression() != (calib.task == TaskType::Regression)) {
        throw DomainError("score kind does not match the dataset task");
    }

    CalibratedPredictor cp;
    cp.model = std::move(model);
    cp.score_fn = std::move(score_fn);
    cp.calib_scores.reserve(calib.size());
    for (const Sample& s : calib.samples) {
        const double v = calib.task == TaskType::Regression
                             ? score(cp.score_fn, s.features, s.target, *cp.model)
                             : score(cp.score_fn, s.features, s.label, *cp.model);
        if (!std::isfinite(v)) throw DomainError("non-finite calibration score");
        cp.calib_scores.push_back(v);
    }
    std::sort(cp.calib_scores.begin(), cp.calib_scores.end());
    return cp;
}

double vcp_threshold(const CalibratedPredictor& cp, Level level) {
    const double n = static_cast<double>(cp.calib_scores.size());
    const double tau = (1.0 - level.alpha) * (1.0 + 1.0 / n);
    return empirical_quantile(cp.calib_scores, tau);
}

PredictionSet vcp_predict(const CalibratedPredictor& cp, std::span<const double> x,
                          Level level) {
    return invert(cp.score_fn, x, vcp_threshold(cp, level), *cp.model);
}

} // namespace cpkit
