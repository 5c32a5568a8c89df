#pragma once

#include <memory>
#include <span>
#include <vector>

#include "cpkit/data.hpp"
#include "cpkit/models.hpp"
#include "cpkit/prediction_set.hpp"
#include "cpkit/scores.hpp"

namespace cpkit {

// Miscoverage rate in (0, 1).
struct Level {
    double alpha;
    explicit Level(double a);
};

/// Empirical tau-th quantile of a sorted (ascending) sample: the k-th
/// largest value with k = ceil((n + 1) * (1 - tau)). Out-of-range indices
/// are completed conservatively: k <= 0 yields +inf (whole-space threshold)
/// and k > n yields the minimum. tau may exceed 1, which always overflows
/// to +inf; throws EmptyScores on an empty sample.
double empirical_quantile(std::span<const double> sorted_scores, double tau);

// Frozen model + sorted calibration scores; everything downstream queries
// this object. Immutable after construction and safe to share.
struct CalibratedPredictor {
    std::shared_ptr<const FittedModel> model;
    ScoreFn score_fn;
    std::vector<double> calib_scores; // ascending, finite

    int n() const { return static_cast<int>(calib_scores.size()); }
};

/// Scores every calibration sample and stores the sorted result.
CalibratedPredictor calibrate(std::shared_ptr<const FittedModel> model,
                              ScoreFn score_fn, const Dataset& calib);

/// Calibration-score quantile at level (1 - alpha) * (1 + 1/n); +inf when
/// the order-statistic index overflows.
double vcp_threshold(const CalibratedPredictor& cp, Level level);

/// Split conformal prediction set {y : score(x, y) <= vcp_threshold}.
/// Deterministic: repeated calls return identical sets.
PredictionSet vcp_predict(const CalibratedPredictor& cp, std::span<const double> x,
                          Level level);

} // namespace cpkit
