#pragma once

#include <memory>
#include <span>
#include <string>

#include "cpkit/models.hpp"
#include "cpkit/prediction_set.hpp"

namespace cpkit {

enum class ScoreKind { AbsoluteResidual, Cqr, SoftmaxProb, NormalizedResidual };

// Non-conformity score family. NormalizedResidual divides the absolute
// residual by a local scale model's output.
struct ScoreFn {
    ScoreKind kind = ScoreKind::AbsoluteResidual;
    std::shared_ptr<const FittedModel> scale_model; // NormalizedResidual only

    static ScoreFn abs_residual() { return {ScoreKind::AbsoluteResidual, nullptr}; }
    static ScoreFn cqr() { return {ScoreKind::Cqr, nullptr}; }
    static ScoreFn softmax() { return {ScoreKind::SoftmaxProb, nullptr}; }
    static ScoreFn normalized(std::shared_ptr<const FittedModel> scale) {
        return {ScoreKind::NormalizedResidual, std::move(scale)};
    }

    bool is_regression() const { return kind != ScoreKind::SoftmaxProb; }
};

ScoreKind score_kind_from_string(const std::string& id); // abs_residual|cqr|softmax|normalized
std::string to_string(ScoreKind kind);

/// Score of a regression response y at x under the fitted model.
double score(const ScoreFn& fn, std::span<const double> x, double y,
             const FittedModel& model, RngStream* rng = nullptr);

/// Score of a class label at x (SoftmaxProb only).
double score(const ScoreFn& fn, std::span<const double> x, int label,
             const FittedModel& model);

/// Inverse map: the set of responses whose score is <= threshold. Larger
/// thresholds give supersets; threshold +inf gives the full response space,
/// and a threshold no response can reach gives the empty set.
PredictionSet invert(const ScoreFn& fn, std::span<const double> x, double threshold,
                     const FittedModel& model, RngStream* rng = nullptr);

} // namespace cpkit
