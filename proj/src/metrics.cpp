#include "cpkit/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "cpkit/errors.hpp"

namespace cpkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool covers(const PredictionSet& set, const Sample& s, TaskType task) {
    return task == TaskType::Regression ? set.contains(s.target)
                                        : set.contains_label(s.label);
}

} // namespace

Predictor make_vcp_predictor(const CalibratedPredictor& cp, Level level) {
    // Threshold is fixed up front; the stream is ignored.
    const double threshold = vcp_threshold(cp, level);
    return [&cp, threshold](std::span<const double> x, RngStream&) {
        return invert(cp.score_fn, x, threshold, *cp.model);
    };
}

Predictor make_pt_predictor(const PTPredictor& pt) {
    pt.config.validate();
    return [&pt](std::span<const double> x, RngStream& rng) {
        return pt_predict(pt, x, rng);
    };
}

AuditReport evaluate(const Predictor& predict, const Dataset& test, Level level,
                     RngStream& rng) {
    test.validate();
    const std::size_t n = test.size();

    AuditReport r;
    r.alpha = level.alpha;
    r.n_test = static_cast<int>(n);
    r.seed = rng.seed();

    std::size_t hits = 0;
    double length_sum = 0.0;
    double length_sq_sum = 0.0;
    bool infinite_length = false;
    std::map<std::string, std::pair<std::size_t, std::size_t>> group_counts; // hits, total

    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = test.samples[i];
        RngStream point_rng = rng.child(i);
        const PredictionSet set = predict(s.features, point_rng);

        const bool hit = covers(set, s, test.task);
        hits += hit;
        const double m = set.measure();
        if (std::isinf(m)) {
            infinite_length = true;
        } else {
            length_sum += m;
            length_sq_sum += m * m;
        }
        if (s.group) {
            auto& [g_hits, g_total] = group_counts[*s.group];
            g_hits += hit;
            g_total += 1;
        }
    }

    const double dn = static_cast<double>(n);
    r.coverage = static_cast<double>(hits) / dn;
    r.coverage_se = std::sqrt(r.coverage * (1.0 - r.coverage) / dn);
    if (infinite_length) {
        // A single unbounded set poisons the mean; dropping it would bias
        // the metric toward methods that emit unbounded sets.
        r.mean_length = kInf;
        r.length_se = kInf;
    } else {
        r.mean_length = length_sum / dn;
        const double var = std::max(0.0, length_sq_sum / dn - r.mean_length * r.mean_length);
        r.length_se = std::sqrt(var / dn);
    }

    r.min_group_coverage = r.coverage;
    for (const auto& [name, counts] : group_counts) {
        const double c = static_cast<double>(counts.first) / static_cast<double>(counts.second);
        r.group_coverage[name] = c;
        r.min_group_coverage = std::min(r.min_group_coverage, c);
    }
    return r;
}

double interval_stability(const Predictor& predict, const Dataset& test, Level level,
                          int repeats, RngStream& rng) {
    (void)level;
    test.validate();
    if (repeats < 2) throw DomainError("interval stability needs at least 2 repeats");

    std::vector<double> measures(static_cast<std::size_t>(repeats));
    double total_var = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const Sample& s = test.samples[i];
        const RngStream point_rng = rng.child(i);
        for (int r = 0; r < repeats; ++r) {
            RngStream rep_rng = point_rng.child(static_cast<std::uint64_t>(r));
            const double m = predict(s.features, rep_rng).measure();
            if (std::isinf(m)) {
                throw InfiniteMeasure("infinite set measure; variance undefined");
            }
            measures[static_cast<std::size_t>(r)] = m;
        }
        // Identical repeats have zero variance by definition; skipping the
        // arithmetic keeps deterministic predictors at exactly 0.
        const auto [lo, hi] = std::minmax_element(measures.begin(), measures.end());
        if (*lo == *hi) continue;
        double mean = 0.0;
        for (double m : measures) mean += m;
        mean /= static_cast<double>(repeats);
        double acc = 0.0;
        for (double m : measures) acc += (m - mean) * (m - mean);
        total_var += acc / static_cast<double>(repeats - 1);
    }
    return total_var / static_cast<double>(test.size());
}

double stability_closed_form(double p, double meaningful_length) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0, 1]");
    if (meaningful_length < 0.0) throw DomainError("length must be nonnegative");
    return p * (1.0 - p) * meaningful_length * meaningful_length;
}

double MiscoverageCurve::at(double alpha) const {
    if (alpha_grid.size() < 2 || alpha_grid.size() != values.size()) {
        throw GridTooCoarse("miscoverage curve needs at least 2 grid points");
    }
    if (alpha < alpha_grid.front() || alpha > alpha_grid.back()) {
        throw GridTooCoarse("alpha outside the tabulated miscoverage grid");
    }
    const auto it = std::lower_bound(alpha_grid.begin(), alpha_grid.end(), alpha);
    const std::size_t hi = std::min<std::size_t>(
        std::max<std::size_t>(1, static_cast<std::size_t>(it - alpha_grid.begin())),
        alpha_grid.size() - 1);
    const std::size_t lo = hi - 1;
    const double w = (alpha - alpha_grid[lo]) / (alpha_grid[hi] - alpha_grid[lo]);
    return (1.0 - w) * values[lo] + w * values[hi];
}

CoverageVerdict conditional_coverage_condition(const MiscoverageCurve& f, double alpha,
                                               double p) {
    const double alpha_prime = adjusted_alpha(alpha, p);
    const double gain = f.at(alpha) - p * f.at(alpha_prime);
    return gain >= (1.0 - p) ? CoverageVerdict::Improves : CoverageVerdict::NoGuarantee;
}

MiscoverageCurve estimate_miscoverage_curve(const CalibratedPredictor& cp,
                                            const std::vector<Sample>& subset,
                                            std::span<const double> alpha_grid) {
    if (subset.empty()) throw DataError("empty subset for miscoverage estimation");
    MiscoverageCurve curve;
    curve.alpha_grid.assign(alpha_grid.begin(), alpha_grid.end());
    curve.values.reserve(alpha_grid.size());
    const bool regression = cp.score_fn.is_regression();
    for (double a : alpha_grid) {
        std::size_t misses = 0;
        for (const Sample& s : subset) {
            const PredictionSet set = vcp_predict(cp, s.features, Level(a));
            const bool hit = regression ? set.contains(s.target) : set.contains_label(s.label);
            misses += !hit;
        }
        curve.values.push_back(static_cast<double>(misses) / static_cast<double>(subset.size()));
    }
    return curve;
}

namespace {

void append_double(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "nan";
        return;
    }
    if (std::isinf(v)) {
        out += v > 0 ? "inf" : "-inf";
        return;
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

} // namespace

std::string report_csv_header() {
    return "method,alpha,p,coverage,coverage_se,mean_length,length_se,"
           "min_group_coverage,interval_stability,stability_se,n_test,trials,seed";
}

std::string report_csv_row(const AuditReport& r) {
    std::string out = r.method;
    const double cols[] = {r.alpha,       r.p,
                           r.coverage,    r.coverage_se,
                           r.mean_length, r.length_se,
                           r.min_group_coverage,
                           r.interval_stability, r.stability_se};
    for (double v : cols) {
        out += ',';
        append_double(out, v);
    }
    out += ',' + std::to_string(r.n_test);
    out += ',' + std::to_string(r.trials);
    out += ',' + std::to_string(r.seed);
    return out;
}

} // namespace cpkit
