#include "cpkit/theory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "cpkit/errors.hpp"
#include "cpkit/pt.hpp"

namespace cpkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

void LengthCurve::validate() const {
    if (levels.size() != lengths.size() || levels.size() < 3) {
        throw GridTooCoarse("length curve needs at least 3 grid points");
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] < 1.0)) {
            throw DomainError("length-curve levels must lie in (0, 1)");
        }
        if (i > 0 && levels[i] <= levels[i - 1]) {
            throw DomainError("length-curve levels must be strictly ascending");
        }
        if (std::isnan(lengths[i]) || lengths[i] < 0.0) {
            throw DomainError("length-curve values must be nonnegative");
        }
        if (i > 0 && lengths[i] < lengths[i - 1] - 1e-12) {
            throw DomainError("length curve must be nondecreasing in the coverage level");
        }
    }
}

double LengthCurve::at(double c) const {
    if (levels.size() < 2) throw GridTooCoarse("length curve needs at least 2 grid points");
    if (c < levels.front() || c > levels.back()) {
        throw GridTooCoarse("coverage level outside the curve grid");
    }
    const auto it = std::lower_bound(levels.begin(), levels.end(), c);
    std::size_t hi = static_cast<std::size_t>(it - levels.begin());
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    if (std::isinf(lengths[lo]) || std::isinf(lengths[hi])) return kInf;
    const double w = (c - levels[lo]) / (levels[hi] - levels[lo]);
    return (1.0 - w) * lengths[lo] + w * lengths[hi];
}

std::vector<double> default_level_grid() {
    std::vector<double> grid;
    for (int i = 50; i <= 99; ++i) grid.push_back(static_cast<double>(i) / 100.0);
    grid.push_back(0.995);
    return grid;
}

LengthCurve build_length_curve(const CalibratedPredictor& cp,
                               std::span<const double> grid,
                               const std::vector<std::vector<double>>& probe_points) {
    LengthCurve curve;
    curve.provenance = "empirical(n=" + std::to_string(cp.n()) + ")";
    curve.levels.assign(grid.begin(), grid.end());
    curve.lengths.reserve(grid.size());

    std::vector<std::vector<double>> probes = probe_points;
    if (probes.empty()) {
        probes.emplace_back(static_cast<std::size_t>(cp.model->dim()), 0.0);
    }

    for (double c : grid) {
        if (!(c > 0.0 && c < 1.0)) throw DomainError("grid levels must lie in (0, 1)");
        double total = 0.0;
        for (const auto& x : probes) {
            total += vcp_predict(cp, x, Level(1.0 - c)).measure();
        }
        curve.lengths.push_back(total / static_cast<double>(probes.size()));
    }
    curve.validate();
    return curve;
}

std::string to_string(ConditionVerdict v) {
    switch (v) {
    case ConditionVerdict::Holds: return "holds";
    case ConditionVerdict::Boundary: return "boundary";
    case ConditionVerdict::Fails: return "fails";
    }
    return "?";
}

std::optional<double> check_general_condition(const LengthCurve& curve, double alpha,
                                              std::span<const double> p_grid) {
    const double c = 1.0 - alpha;
    const double base = curve.at(c);
    std::optional<double> best_p;
    double best_value = base;
    for (double p : p_grid) {
        if (!(p > 1.0 - alpha && p < 1.0)) {
            throw DomainError("keep-probability grid must lie in (1 - alpha, 1)");
        }
        const double wrapped = p * curve.at(c / p);
        // Strictly-better only; ties between p values resolve toward larger p.
        if (wrapped < best_value || (best_p && wrapped == best_value && p > *best_p)) {
            best_value = wrapped;
            best_p = p;
        }
    }
    return best_p;
}

ConditionVerdict check_first_order(const LengthCurve& curve, double alpha, double h) {
    if (!(h > 0.0)) throw DomainError("finite-difference width must be positive");
    const double c = 1.0 - alpha;
    const double lhs = curve.at(c) / c;
    const double derivative = (curve.at(c + h) - curve.at(c - h)) / (2.0 * h);
    if (lhs > derivative) return ConditionVerdict::Holds;
    if (lhs == derivative) return ConditionVerdict::Boundary;
    return ConditionVerdict::Fails;
}

std::optional<SecantWitness> check_secant(const LengthCurve& curve, double alpha,
                                          std::span<const double> u_grid) {
    const double c = 1.0 - alpha;
    const double base = curve.at(c);
    const double lhs = base / c;
    for (double u : u_grid) {
        if (!(u > c && u < 1.0)) {
            throw DomainError("secant levels must lie in (1 - alpha, 1)");
        }
        const double slope = (curve.at(u) - base) / (u - c);
        if (lhs > slope) return SecantWitness{u, c / u};
    }
    return std::nullopt;
}

bool check_local_concavity(const LengthCurve& curve, double alpha) {
    const double c = 1.0 - alpha;
    // Sub-grid at or below the target coverage.
    std::vector<double> xs, ys;
    double scale = 0.0;
    for (std::size_t i = 0; i < curve.levels.size(); ++i) {
        if (curve.levels[i] <= c + 1e-15) {
            xs.push_back(curve.levels[i]);
            ys.push_back(curve.lengths[i]);
            scale = std::max(scale, std::abs(curve.lengths[i]));
        }
    }
    if (xs.size() < 3) throw GridTooCoarse("concavity check needs 3 grid points below 1 - alpha");

    const double tol = 1e-9 * std::max(1.0, scale);
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        const double left = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
        const double right = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        if (right - left > tol) return false; // slope increased: convex here
    }
    return true;
}

GaussianFailure gaussian_failure_case(double alpha, double p) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (!(p > 1.0 - alpha && p < 1.0)) throw DomainError("p must lie in (1 - alpha, 1)");
    const double alpha_prime = adjusted_alpha(alpha, p);
    GaussianFailure out;
    out.vcp_length = 2.0 * std_normal_inv_cdf(1.0 - alpha / 2.0);
    out.pt_expected_length = 2.0 * p * std_normal_inv_cdf(1.0 - alpha_prime / 2.0);
    return out;
}

std::string curve_csv(const LengthCurve& curve) {
    std::string out = "level,length\n";
    char buf[64];
    for (std::size_t i = 0; i < curve.levels.size(); ++i) {
        auto r1 = std::to_chars(buf, buf + sizeof(buf), curve.levels[i]);
        out.append(buf, r1.ptr);
        out += ',';
        if (std::isinf(curve.lengths[i])) {
            out += "inf";
        } else {
            auto r2 = std::to_chars(buf, buf + sizeof(buf), curve.lengths[i]);
            out.append(buf, r2.ptr);
        }
        out += '\n';
    }
    return out;
}

} // namespace cpkit
