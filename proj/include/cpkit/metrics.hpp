#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cpkit/conformal.hpp"
#include "cpkit/data.hpp"
#include "cpkit/pt.hpp"
#include "cpkit/prediction_set.hpp"

namespace cpkit {

// Set-valued predictor handle; randomized predictors consume the stream,
// deterministic ones ignore it.
using Predictor = std::function<PredictionSet(std::span<const double>, RngStream&)>;

Predictor make_vcp_predictor(const CalibratedPredictor& cp, Level level);
Predictor make_pt_predictor(const PTPredictor& pt);

struct AuditReport {
    std::string method;
    double alpha = 0.0;
    double p = 1.0;
    double coverage = 0.0;
    double coverage_se = 0.0;
    double mean_length = 0.0; // may be +inf
    double length_se = 0.0;
    std::map<std::string, double> group_coverage;
    double min_group_coverage = 0.0; // equals coverage when no groups exist
    double interval_stability = std::numeric_limits<double>::quiet_NaN();
    double stability_se = std::numeric_limits<double>::quiet_NaN();
    int n_test = 0;
    int trials = 1;
    std::uint64_t seed = 0;
};

/// Coverage, mean set measure, and per-group coverage over a test fold.
/// Point i is evaluated with child stream rng.child(i), so serial and
/// parallel sweeps produce identical reports.
AuditReport evaluate(const Predictor& predict, const Dataset& test, Level level,
                     RngStream& rng);

/// Mean over test points of the unbiased variance of the set measure across
/// `repeats` reruns with frozen data. Zero for deterministic predictors;
/// throws InfiniteMeasure if any rerun yields an infinite measure.
double interval_stability(const Predictor& predict, const Dataset& test, Level level,
                          int repeats, RngStream& rng);

/// Closed-form stability of the wrapper: p * (1 - p) * meaningful_length^2.
double stability_closed_form(double p, double meaningful_length);

// Tabulated conditional miscoverage curve alpha -> f(alpha) on a subset of
// the feature space; evaluated by linear interpolation.
struct MiscoverageCurve {
    std::vector<double> alpha_grid; // ascending
    std::vector<double> values;

    double at(double alpha) const; // GridTooCoarse outside the grid
};

enum class CoverageVerdict { Improves, NoGuarantee };

/// Does the wrapper at keep-probability p improve conditional coverage on
/// the subset behind f? Tests f(alpha) - p * f(alpha') >= 1 - p with
/// alpha' = 1 - (1 - alpha) / p (non-strict; equality counts as improvement).
CoverageVerdict conditional_coverage_condition(const MiscoverageCurve& f, double alpha,
                                               double p);

/// Empirical miscoverage curve of the base predictor over a sample subset,
/// produced by sweeping alpha over a grid.
MiscoverageCurve estimate_miscoverage_curve(const CalibratedPredictor& cp,
                                            const std::vector<Sample>& subset,
                                            std::span<const double> alpha_grid);

// One-row CSV serialization; the column set is frozen.
std::string report_csv_header();
std::string report_csv_row(const AuditReport& r);

} // namespace cpkit
