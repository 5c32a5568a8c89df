#include "cpkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpkit/errors.hpp"

namespace cpkit {

bool FittedModel::is_regression() const {
    return !std::holds_alternative<Logistic>(kind);
}

int FittedModel::dim() const {
    if (const auto* m = std::get_if<LinearMean>(&kind)) return static_cast<int>(m->weights.size());
    if (const auto* q = std::get_if<LinearQuantile>(&kind)) return static_cast<int>(q->lo_weights.size());
    if (const auto* l = std::get_if<Logistic>(&kind)) {
        return l->weights.empty() ? 0 : static_cast<int>(l->weights.front().size());
    }
    return 0; // TwoPointScale ignores features
}

namespace {

double dot(std::span<const double> w, std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
    return acc;
}

void check_dim(const FittedModel& m, std::span<const double> x) {
    if (std::holds_alternative<TwoPointScale>(m.kind)) return;
    if (m.dim() != static_cast<int>(x.size())) {
        throw DimensionMismatch("feature vector has dimension " + std::to_string(x.size()) +
                                ", model expects " + std::to_string(m.dim()));
    }
}

// Gaussian elimination with partial pivoting; returns false on a tiny pivot.
bool solve_inplace(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) < 1e-12) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * b[c];
        b[i] = acc / a[i][i];
    }
    return true;
}

struct Standardizer {
    std::vector<double> mean, sd;

    explicit Standardizer(const Dataset& data) {
        const int d = data.dim();
        mean.assign(d, 0.0);
        sd.assign(d, 0.0);
        for (const Sample& s : data.samples) {
            for (int j = 0; j < d; ++j) mean[j] += s.features[j];
        }
        for (double& m : mean) m /= static_cast<double>(data.size());
        for (const Sample& s : data.samples) {
            for (int j = 0; j < d; ++j) {
                const double c = s.features[j] - mean[j];
                sd[j] += c * c;
            }
        }
        for (double& v : sd) {
            v = std::sqrt(v / static_cast<double>(data.size()));
            if (v < 1e-12) v = 1.0; // constant feature, leave unscaled
        }
    }

    double scaled(const Sample& s, int j) const { return (s.features[j] - mean[j]) / sd[j]; }
};

} // namespace

FittedModel fit_linear_mean(const Dataset& train) {
    train.validate();
    if (train.task != TaskType::Regression) throw DomainError("fit_linear_mean requires regression data");
    const int d = train.dim();
    const std::size_t n = train.size();
    if (n <= static_cast<std::size_t>(d) + 1) {
        throw SingularDesign("need more than dim + 1 training samples");
    }

    // Normal equations over [x, 1].
    const int m = d + 1;
    std::vector<std::vector<double>> xtx(m, std::vector<double>(m, 0.0));
    std::vector<double> xty(m, 0.0);
    for (const Sample& s : train.samples) {
        for (int i = 0; i < m; ++i) {
            const double xi = i < d ? s.features[i] : 1.0;
            xty[i] += xi * s.target;
            for (int j = i; j < m; ++j) {
                const double xj = j < d ? s.features[j] : 1.0;
                xtx[i][j] += xi * xj;
            }
        }
    }
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < i; ++j) xtx[i][j] = xtx[j][i];
    }

    auto a = xtx;
    auto b = xty;
    if (!solve_inplace(a, b)) {
        a = xtx;
        b = xty;
        for (int i = 0; i < m; ++i) a[i][i] += 1e-8;
        if (!solve_inplace(a, b)) throw SingularDesign("design matrix is singular");
    }

    LinearMean lm;
    lm.weights.assign(b.begin(), b.begin() + d);
    lm.intercept = b[d];
    return FittedModel{lm, 0.0};
}

double pinball_loss(double residual, double tau) {
    return residual >= 0.0 ? tau * residual : (tau - 1.0) * residual;
}

double pinball_subgradient(double residual, double tau) {
    // At the kink we take the right derivative.
    return residual >= 0.0 ? tau : tau - 1.0;
}

double mean_pinball_loss(const Dataset& data, std::span<const double> weights,
                         double intercept, double tau) {
    double acc = 0.0;
    for (const Sample& s : data.samples) {
        acc += pinball_loss(s.target - (dot(weights, s.features) + intercept), tau);
    }
    return acc / static_cast<double>(data.size());
}

namespace {

struct QuantileLine {
    std::vector<double> weights;
    double intercept;
};

QuantileLine fit_one_quantile(const Dataset& train, const Standardizer& std_x,
                              double tau, int steps, double lr,
                              std::vector<double>* checkpoints) {
    const int d = train.dim();
    const std::size_t n = train.size();

    // Warm start at the empirical tau-quantile of the targets.
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = train.samples[i].target;
    std::sort(ys.begin(), ys.end());
    const std::size_t q_idx =
        std::min(n - 1, static_cast<std::size_t>(std::floor(tau * static_cast<double>(n))));

    std::vector<double> w(d, 0.0);
    double b = ys[q_idx];

    auto loss_of = [&](const std::vector<double>& wv, double bv) {
        double acc = 0.0;
        for (const Sample& s : train.samples) {
            double pred = bv;
            for (int j = 0; j < d; ++j) pred += wv[j] * std_x.scaled(s, j);
            acc += pinball_loss(s.target - pred, tau);
        }
        return acc / static_cast<double>(n);
    };

    std::vector<double> best_w = w;
    double best_b = b;
    double best_loss = loss_of(w, b);

    const int checkpoint_every = std::max(1, steps / 10);
    std::vector<double> grad(d);
    for (int step = 1; step <= steps; ++step) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (const Sample& s : train.samples) {
            double pred = b;
            for (int j = 0; j < d; ++j) pred += w[j] * std_x.scaled(s, j);
            const double g = pinball_subgradient(s.target - pred, tau);
            for (int j = 0; j < d; ++j) grad[j] += g * std_x.scaled(s, j);
            grad_b += g;
        }
        // Subgradient ascent direction on the residual is descent on the loss.
        const double step_lr = lr / (1.0 + 4.0 * static_cast<double>(step) / static_cast<double>(steps));
        for (int j = 0; j < d; ++j) w[j] += step_lr * grad[j] / static_cast<double>(n);
        b += step_lr * grad_b / static_cast<double>(n);

        const double loss = loss_of(w, b);
        if (!std::isfinite(loss)) throw Diverged("pinball loss became non-finite");
        if (loss < best_loss) {
            best_loss = loss;
            best_w = w;
            best_b = b;
        }
        if (checkpoints && step % checkpoint_every == 0) checkpoints->push_back(best_loss);
    }

    // Map standardized-space coefficients back to input space.
    QuantileLine line;
    line.weights.assign(d, 0.0);
    line.intercept = best_b;
    for (int j = 0; j < d; ++j) {
        line.weights[j] = best_w[j] / std_x.sd[j];
        line.intercept -= best_w[j] * std_x.mean[j] / std_x.sd[j];
    }
    return line;
}

} // namespace

FittedModel fit_linear_quantile(const Dataset& train, double tau_lo, double tau_hi,
                                int steps, double lr, QuantileFitTrace* trace) {
    train.validate();
    if (train.task != TaskType::Regression) throw DomainError("fit_linear_quantile requires regression data");
    if (!(tau_lo > 0.0 && tau_lo < tau_hi && tau_hi < 1.0)) {
        throw DomainError("quantile levels must satisfy 0 < tau_lo < tau_hi < 1");
    }
    if (steps < 1) throw DomainError("steps must be >= 1");

    const Standardizer std_x(train);
    QuantileLine lo = fit_one_quantile(train, std_x, tau_lo, steps, lr,
                                       trace ? &trace->lo_checkpoints : nullptr);
    QuantileLine hi = fit_one_quantile(train, std_x, tau_hi, steps, lr,
                                       trace ? &trace->hi_checkpoints : nullptr);

    LinearQuantile lq;
    lq.lo_weights = std::move(lo.weights);
    lq.lo_intercept = lo.intercept;
    lq.hi_weights = std::move(hi.weights);
    lq.hi_intercept = hi.intercept;
    lq.tau_lo = tau_lo;
    lq.tau_hi = tau_hi;
    return FittedModel{lq, 0.0};
}

FittedModel inject_bias(const FittedModel& model, double b) {
    FittedModel out = model;
    out.bias += b;
    return out;
}

Prediction predict(const FittedModel& model, std::span<const double> x, RngStream* rng) {
    check_dim(model, x);
    Prediction out;
    if (const auto* lm = std::get_if<LinearMean>(&model.kind)) {
        out.point = dot(lm->weights, x) + lm->intercept + model.bias;
        return out;
    }
    if (const auto* lq = std::get_if<LinearQuantile>(&model.kind)) {
        out.q_lo = dot(lq->lo_weights, x) + lq->lo_intercept + model.bias;
        out.q_hi = dot(lq->hi_weights, x) + lq->hi_intercept + model.bias;
        return out;
    }
    if (const auto* lg = std::get_if<Logistic>(&model.kind)) {
        const int k = static_cast<int>(lg->weights.size());
        std::vector<double> logits(k);
        for (int c = 0; c < k; ++c) {
            logits[c] = dot(lg->weights[c], x) + lg->intercepts[c];
            if (c >= lg->bias_class_lo && c <= lg->bias_class_hi) logits[c] += model.bias;
        }
        const double top = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double& v : logits) {
            v = std::exp(v - top);
            z += v;
        }
        out.probs.resize(k);
        for (int c = 0; c < k; ++c) out.probs[c] = logits[c] / z;
        return out;
    }
    const auto& tp = std::get<TwoPointScale>(model.kind);
    if (rng == nullptr) throw DomainError("TwoPointScale prediction needs an rng stream");
    out.scale = rng->uniform() < tp.p_keep ? 1.0 : 0.0;
    return out;
}

} // namespace cpkit
