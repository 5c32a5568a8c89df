#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpkit/conformal.hpp"
#include "cpkit/normal.hpp"

namespace cpkit {

// Mean prediction-set length as a function of the coverage level c, on an
// ascending grid. Lengths are nonnegative and nondecreasing in c; a +inf
// entry marks a level whose quantile overflowed.
struct LengthCurve {
    std::vector<double> levels;  // coverage levels in (0, 1)
    std::vector<double> lengths; // may contain +inf
    std::string provenance;

    /// Linear interpolation; GridTooCoarse outside the grid, +inf when an
    /// adjacent grid value is infinite.
    double at(double c) const;
    void validate() const;
};

/// Coverage grid 0.50, 0.51, ..., 0.99, 0.995.
std::vector<double> default_level_grid();

/// Empirical curve: mean set measure over probe points at every grid level.
/// With no probe points the model-space origin is used, which is exact for
/// x-independent scores such as the absolute residual.
LengthCurve build_length_curve(const CalibratedPredictor& cp,
                               std::span<const double> grid,
                               const std::vector<std::vector<double>>& probe_points = {});

enum class ConditionVerdict { Holds, Boundary, Fails };
std::string to_string(ConditionVerdict v);

/// Smallest wrapped length over the keep-probability grid: the p minimizing
/// p * L((1 - alpha) / p), returned only when it strictly beats L(1 - alpha).
/// Ties break toward larger p (less randomness injected).
std::optional<double> check_general_condition(const LengthCurve& curve, double alpha,
                                              std::span<const double> p_grid);

/// First-order test at the target coverage: L(1 - alpha) / (1 - alpha)
/// against a central-difference derivative with half-width h.
ConditionVerdict check_first_order(const LengthCurve& curve, double alpha, double h);

struct SecantWitness {
    double u; // coverage level that witnesses the condition
    double p; // implied keep probability (1 - alpha) / u
};

/// Scans u over the grid ascending and returns the first level whose secant
/// slope stays strictly below L(1 - alpha) / (1 - alpha).
std::optional<SecantWitness> check_secant(const LengthCurve& curve, double alpha,
                                          std::span<const double> u_grid);

/// True when the curve's second differences over [grid start, 1 - alpha]
/// stay within tolerance of nonpositive, i.e. the curve is locally concave
/// below the target coverage.
bool check_local_concavity(const LengthCurve& curve, double alpha);

// Closed-form lengths when the score distribution is standard normal; the
// wrapped expectation exceeds the base length for every valid (alpha, p).
struct GaussianFailure {
    double vcp_length;
    double pt_expected_length;
};
GaussianFailure gaussian_failure_case(double alpha, double p);

// Two-column CSV (level,length) for external plotting.
std::string curve_csv(const LengthCurve& curve);

} // namespace cpkit
