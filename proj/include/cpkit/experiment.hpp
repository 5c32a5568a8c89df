#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpkit/metrics.hpp"
#include "cpkit/synth.hpp"
#include "cpkit/theory.hpp"

namespace cpkit {

// Parsed experiment configuration. The file format is flat `section.key =
// value` lines with '#' comments; a file whose first non-space character is
// '{' is parsed as JSON with nested objects flattened to dotted keys.
struct ExperimentConfig {
    enum class DataKind { Mixture, Gaussian, Logistic, Csv };
    enum class ModelKind { Linear, Quantile, LogisticOracle };

    DataKind data_kind = DataKind::Mixture;
    std::size_t data_n = 6000;
    int data_dim = 2;
    double data_mu = 20.0;
    double data_sigma = 1.0;
    std::vector<double> data_beta; // empty: defaults to (1, -1, 1, -1, ...)
    int data_classes = 4;
    std::string data_path; // csv source

    SplitFractions split{0.4, 0.3, 0.3};

    ModelKind model_kind = ModelKind::Linear;
    double model_bias = 0.0;
    int bias_class_lo = 0;
    int bias_class_hi = -1;
    double tau_lo = 0.05;
    double tau_hi = 0.95;
    int quantile_steps = 2000;
    double quantile_lr = 0.05;

    ScoreKind score_kind = ScoreKind::AbsoluteResidual;

    std::vector<std::string> methods = {"vcp", "pt"};
    std::vector<double> alphas = {0.1};
    std::vector<double> pt_p = {0.95};
    bool pt_two_level_mode = false; // pt.mode = two_level
    double pt_alpha1 = 0.9;

    int trials = 5;
    int repeats = 100;
    std::uint64_t seed = 1;

    std::string out_csv;
    std::string out_json;

    double theory_h = 0.01;

    void validate() const;

    static ExperimentConfig parse_string(const std::string& text);
    static ExperimentConfig parse_file(const std::string& path);

    // Canonical key/value view of the parsed config, echoed into reports.
    std::map<std::string, std::string> canonical() const;
};

struct ExperimentResult {
    std::vector<AuditReport> reports; // aggregated across trials
    std::string csv;
    std::string json;
};

/// Monte-Carlo sweep over trials x methods x alpha x p: regenerate, refit,
/// recalibrate, evaluate; aggregates means and across-trial standard errors.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Same sweep, additionally measuring interval stability with cfg.repeats
/// reruns per test point.
ExperimentResult run_audit(const ExperimentConfig& cfg);

struct TheoryAlphaReport {
    double alpha = 0.0;
    std::optional<double> general_best_p;
    ConditionVerdict first_order = ConditionVerdict::Fails;
    std::optional<SecantWitness> secant;
    bool locally_concave = false;
    std::vector<std::pair<double, GaussianFailure>> gaussian; // per p
};

struct TheoryReport {
    LengthCurve curve;
    std::vector<TheoryAlphaReport> per_alpha;
    std::string text; // human-readable verdict listing
};

/// Builds the empirical length curve for the configured base predictor and
/// evaluates every sufficient-condition checker on it.
TheoryReport run_theory(const ExperimentConfig& cfg);

/// Calibration thresholds for each configured alpha (debugging aid).
std::vector<std::pair<double, double>> run_quantile(const ExperimentConfig& cfg);

} // namespace cpkit
