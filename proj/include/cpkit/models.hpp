#pragma once

#include <span>
#include <variant>
#include <vector>

#include "cpkit/data.hpp"
#include "cpkit/rng.hpp"

namespace cpkit {

struct LinearMean {
    std::vector<double> weights;
    double intercept = 0.0;
};

struct LinearQuantile {
    std::vector<double> lo_weights;
    double lo_intercept = 0.0;
    std::vector<double> hi_weights;
    double hi_intercept = 0.0;
    double tau_lo = 0.05;
    double tau_hi = 0.95;
};

// Multinomial logit with fixed coefficients. An additive output bias, when
// set, shifts the logits of classes in [bias_class_lo, bias_class_hi] before
// the softmax.
struct Logistic {
    std::vector<std::vector<double>> weights; // classes x dim
    std::vector<double> intercepts;           // classes
    int bias_class_lo = 0;
    int bias_class_hi = -1; // inclusive; empty range by default
};

// Degenerate local-scale estimator: emits scale 1 with probability p_keep,
// otherwise the value 0, which stands in for an infinitesimal scale.
struct TwoPointScale {
    double p_keep = 1.0;
};

struct FittedModel {
    std::variant<LinearMean, LinearQuantile, Logistic, TwoPointScale> kind;
    double bias = 0.0; // additive output shift, see inject_bias

    bool is_regression() const;
    int dim() const;
};

// One model output: exactly one member is meaningful per model kind.
struct Prediction {
    double point = 0.0;               // LinearMean
    double q_lo = 0.0, q_hi = 0.0;    // LinearQuantile
    std::vector<double> probs;        // Logistic
    double scale = 1.0;               // TwoPointScale
};

/// Ordinary least squares with intercept via normal equations; retries with
/// ridge lambda = 1e-8 on rank deficiency and throws SingularDesign if that
/// also fails.
FittedModel fit_linear_mean(const Dataset& train);

// Loss at every 10%-of-steps checkpoint during a quantile fit (best-iterate
// values, non-increasing by construction).
struct QuantileFitTrace {
    std::vector<double> lo_checkpoints;
    std::vector<double> hi_checkpoints;
};

/// Linear quantile regression at levels (tau_lo, tau_hi) by full-batch
/// subgradient descent on the pinball loss; features are standardized
/// internally and the best iterate is returned, so the final loss never
/// exceeds the initial one.
FittedModel fit_linear_quantile(const Dataset& train, double tau_lo, double tau_hi,
                                int steps = 2000, double lr = 0.05,
                                QuantileFitTrace* trace = nullptr);

// Same model with b added to every prediction (regression kinds) or to the
// configured logit range (Logistic).
FittedModel inject_bias(const FittedModel& model, double b);

// rng is only consulted by TwoPointScale and must be non-null for it.
Prediction predict(const FittedModel& model, std::span<const double> x,
                   RngStream* rng = nullptr);

// Pinball loss and its subgradient, exposed for fit diagnostics.
double pinball_loss(double residual, double tau);
double pinball_subgradient(double residual, double tau);

// Mean pinball loss of a (weights, intercept) line over a dataset.
double mean_pinball_loss(const Dataset& data, std::span<const double> weights,
                         double intercept, double tau);

} // namespace cpkit
