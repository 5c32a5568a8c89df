#pragma once

#include <span>
#include <utility>

#include "cpkit/conformal.hpp"

namespace cpkit {

/// Adjusted miscoverage 1 - (1 - alpha) / p, so that p * (1 - alpha')
/// equals 1 - alpha exactly. Requires p in (1 - alpha, 1]; p = 1 returns
/// alpha unchanged.
double adjusted_alpha(double alpha, double p);

/// Second level of the two-level variant: alpha2 solved from
/// (1 - p) * alpha1 + p * alpha2 = alpha.
double solve_alpha2(double alpha, double p, double alpha1);

// Randomized wrapper configuration. NullSet mode returns a measure-zero set
// with probability 1 - p; TwoLevel mode returns the base set at level
// 1 - alpha1 instead.
struct PTConfig {
    enum class Mode { NullSet, TwoLevel };

    double p = 1.0;
    Mode mode = Mode::NullSet;
    double alpha1 = 0.0; // TwoLevel only
    double target_alpha = 0.1;

    // Meaningful-branch miscoverage: alpha' in NullSet mode, alpha2 in
    // TwoLevel mode.
    double meaningful_alpha() const;
    void validate() const;
};

struct PTPredictor {
    CalibratedPredictor base;
    PTConfig config;
};

// Measure-zero set at x: the point prediction for regression scores, the
// empty label set for classification.
PredictionSet null_prediction(const CalibratedPredictor& base, std::span<const double> x);

/// One wrapped prediction. Draws a single uniform from rng; batch callers
/// must hand each point its own child stream, keyed by point index.
PredictionSet pt_predict(const PTPredictor& pt, std::span<const double> x, RngStream& rng);

// Side-by-side draw of localized conformal prediction with a two-point
// scale estimator and the wrapper with the same coin. The calibration-side
// scale draws are frozen at construction and reused for every paired draw.
class LocalizedEquivalence {
public:
    LocalizedEquivalence(const CalibratedPredictor& base, Level level, double p,
                         RngStream& rng);

    // (localized set, wrapped set) driven by one shared uniform draw.
    std::pair<PredictionSet, PredictionSet> paired_draw(std::span<const double> x,
                                                        RngStream& rng) const;

    double localized_threshold() const { return localized_threshold_; }
    double meaningful_threshold() const { return pt_threshold_; }

private:
    const CalibratedPredictor& base_;
    double p_;
    double localized_threshold_;
    double pt_threshold_;
};

/// Convenience wrapper around LocalizedEquivalence for a single paired draw;
/// base must use the absolute-residual score.
std::pair<PredictionSet, PredictionSet>
localized_pt_equivalence(const CalibratedPredictor& base, Level level, double p,
                         std::span<const double> x, RngStream& rng);

} // namespace cpkit
