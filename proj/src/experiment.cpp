#include "cpkit/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "cpkit/errors.hpp"

namespace cpkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Raw key/value view with consumption tracking so typos surface as errors.
class KeyValues {
public:
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string str(const std::string& key, const std::string& fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        used_.insert(key);
        return it->second;
    }

    double num(const std::string& key, double fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        used_.insert(key);
        return parse_num(key, it->second);
    }

    std::vector<double> num_list(const std::string& key, std::vector<double> fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        used_.insert(key);
        std::vector<double> out;
        for (const std::string& item : split_list(it->second)) {
            out.push_back(parse_num(key, item));
        }
        if (out.empty()) throw ConfigError(key + ": empty list");
        return out;
    }

    std::vector<std::string> str_list(const std::string& key, std::vector<std::string> fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        used_.insert(key);
        return split_list(it->second);
    }

    void reject_unknown() const {
        for (const auto& [key, value] : kv_) {
            if (!used_.count(key)) throw ConfigError(key + ": unknown configuration key");
        }
    }

private:
    static double parse_num(const std::string& key, const std::string& s) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw ConfigError(key + ": expected a number, got '" + s + "'");
        }
        return v;
    }

    std::map<std::string, std::string> kv_;
    std::set<std::string> used_;
};

void flatten_json(const nlohmann::ordered_json& node, const std::string& prefix, KeyValues& out) {
    if (node.is_object()) {
        for (const auto& [key, value] : node.items()) {
            flatten_json(value, prefix.empty() ? key : prefix + "." + key, out);
        }
        return;
    }
    if (node.is_array()) {
        std::string joined;
        for (const auto& v : node) {
            if (!joined.empty()) joined += ',';
            joined += v.is_string() ? v.get<std::string>() : v.dump();
        }
        out.set(prefix, joined);
        return;
    }
    out.set(prefix, node.is_string() ? node.get<std::string>() : node.dump());
}

KeyValues read_key_values(const std::string& text) {
    KeyValues kv;
    const std::string body = trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::ordered_json j;
        try {
            j = nlohmann::ordered_json::parse(body);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("json: ") + e.what());
        }
        flatten_json(j, "", kv);
        return kv;
    }
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        kv.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
}

const std::set<std::string> kKnownMethods = {"vcp", "pt", "pt_two_level", "cqr", "pt_cqr"};

bool is_pt_method(const std::string& m) {
    return m == "pt" || m == "pt_two_level" || m == "pt_cqr";
}

} // namespace

ExperimentConfig ExperimentConfig::parse_string(const std::string& text) {
    KeyValues kv = read_key_values(text);
    ExperimentConfig cfg;

    const std::string data_kind = kv.str("data.kind", "mixture");
    if (data_kind == "mixture") cfg.data_kind = DataKind::Mixture;
    else if (data_kind == "gaussian") cfg.data_kind = DataKind::Gaussian;
    else if (data_kind == "logistic") cfg.data_kind = DataKind::Logistic;
    else if (data_kind == "csv") cfg.data_kind = DataKind::Csv;
    else throw ConfigError("data.kind: expected mixture|gaussian|logistic|csv");

    cfg.data_n = static_cast<std::size_t>(kv.num("data.n", static_cast<double>(cfg.data_n)));
    cfg.data_dim = static_cast<int>(kv.num("data.d", cfg.data_dim));
    cfg.data_mu = kv.num("data.mu", cfg.data_mu);
    cfg.data_sigma = kv.num("data.sigma", cfg.data_sigma);
    cfg.data_beta = kv.num_list("data.beta", {});
    cfg.data_classes = static_cast<int>(kv.num("data.classes", cfg.data_classes));
    cfg.data_path = kv.str("data.path", "");

    cfg.split.train = kv.num("split.train", cfg.split.train);
    cfg.split.calib = kv.num("split.calib", cfg.split.calib);
    cfg.split.test = kv.num("split.test", cfg.split.test);

    const std::string model_kind = kv.str("model.kind", "");
    if (model_kind == "linear") cfg.model_kind = ModelKind::Linear;
    else if (model_kind == "quantile") cfg.model_kind = ModelKind::Quantile;
    else if (model_kind == "logistic_oracle") cfg.model_kind = ModelKind::LogisticOracle;
    else if (model_kind.empty()) {
        cfg.model_kind = cfg.data_kind == DataKind::Logistic ? ModelKind::LogisticOracle
                                                             : ModelKind::Linear;
    } else {
        throw ConfigError("model.kind: expected linear|quantile|logistic_oracle");
    }

    cfg.model_bias = kv.num("model.bias", 0.0);
    cfg.bias_class_lo = static_cast<int>(kv.num("model.bias_class_lo", 0));
    cfg.bias_class_hi = static_cast<int>(kv.num("model.bias_class_hi", -1));
    cfg.tau_lo = kv.num("model.tau_lo", cfg.tau_lo);
    cfg.tau_hi = kv.num("model.tau_hi", cfg.tau_hi);
    cfg.quantile_steps = static_cast<int>(kv.num("model.steps", cfg.quantile_steps));
    cfg.quantile_lr = kv.num("model.lr", cfg.quantile_lr);

    const std::string score = kv.str("score.kind", "");
    if (!score.empty()) {
        cfg.score_kind = score_kind_from_string(score);
    } else {
        switch (cfg.model_kind) {
        case ModelKind::Linear: cfg.score_kind = ScoreKind::AbsoluteResidual; break;
        case ModelKind::Quantile: cfg.score_kind = ScoreKind::Cqr; break;
        case ModelKind::LogisticOracle: cfg.score_kind = ScoreKind::SoftmaxProb; break;
        }
    }

    cfg.methods = kv.str_list("methods", cfg.methods);
    cfg.alphas = kv.num_list("alpha", cfg.alphas);
    cfg.pt_p = kv.num_list("pt.p", cfg.pt_p);
    const std::string mode = kv.str("pt.mode", "null");
    if (mode == "null") cfg.pt_two_level_mode = false;
    else if (mode == "two_level") cfg.pt_two_level_mode = true;
    else throw ConfigError("pt.mode: expected null|two_level");
    cfg.pt_alpha1 = kv.num("pt.alpha1", cfg.pt_alpha1);

    cfg.trials = static_cast<int>(kv.num("trials", cfg.trials));
    cfg.repeats = static_cast<int>(kv.num("repeats", cfg.repeats));
    cfg.seed = static_cast<std::uint64_t>(kv.num("seed", 1.0));

    cfg.out_csv = kv.str("out.csv", "");
    cfg.out_json = kv.str("out.json", "");
    cfg.theory_h = kv.num("theory.h", cfg.theory_h);

    kv.reject_unknown();
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

void ExperimentConfig::validate() const {
    if (methods.empty()) throw ConfigError("methods: at least one method required");
    for (const std::string& m : methods) {
        if (!kKnownMethods.count(m)) throw ConfigError("methods: unknown method '" + m + "'");
    }
    if (alphas.empty()) throw ConfigError("alpha: at least one level required");
    for (double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha: levels must lie in (0, 1)");
    }
    const bool any_pt = std::any_of(methods.begin(), methods.end(), is_pt_method);
    if (any_pt) {
        for (double a : alphas) {
            for (double p : pt_p) {
                if (!(p > 1.0 - a && p <= 1.0)) {
                    throw ConfigError("pt.p: value " + std::to_string(p) +
                                      " must lie in (1 - alpha, 1] for alpha " + std::to_string(a));
                }
            }
        }
    }
    if (trials < 1) throw ConfigError("trials: must be >= 1");
    if (repeats < 2) throw ConfigError("repeats: must be >= 2");
    if (data_kind == DataKind::Csv && data_path.empty()) {
        throw ConfigError("data.path: required for data.kind = csv");
    }
    if (data_kind != DataKind::Csv && data_n < 3) throw ConfigError("data.n: must be >= 3");
    if (model_kind == ModelKind::LogisticOracle && data_kind != DataKind::Logistic) {
        throw ConfigError("model.kind: logistic_oracle requires data.kind = logistic");
    }
    if (score_kind == ScoreKind::Cqr && model_kind != ModelKind::Quantile) {
        throw ConfigError("score.kind: cqr requires model.kind = quantile");
    }
    if ((score_kind == ScoreKind::AbsoluteResidual || score_kind == ScoreKind::NormalizedResidual) &&
        model_kind != ModelKind::Linear) {
        throw ConfigError("score.kind: residual scores require model.kind = linear");
    }
    if (score_kind == ScoreKind::SoftmaxProb && model_kind != ModelKind::LogisticOracle) {
        throw ConfigError("score.kind: softmax requires model.kind = logistic_oracle");
    }
}

std::map<std::string, std::string> ExperimentConfig::canonical() const {
    auto join = [](const std::vector<double>& xs) {
        std::string out;
        char buf[64];
        for (double x : xs) {
            if (!out.empty()) out += ',';
            auto r = std::to_chars(buf, buf + sizeof(buf), x);
            out.append(buf, r.ptr);
        }
        return out;
    };
    auto fmt = [](double x) {
        char buf[64];
        auto r = std::to_chars(buf, buf + sizeof(buf), x);
        return std::string(buf, r.ptr);
    };
    std::map<std::string, std::string> out;
    const char* kinds[] = {"mixture", "gaussian", "logistic", "csv"};
    out["data.kind"] = kinds[static_cast<int>(data_kind)];
    out["data.n"] = std::to_string(data_n);
    out["data.d"] = std::to_string(data_dim);
    out["data.mu"] = fmt(data_mu);
    out["data.sigma"] = fmt(data_sigma);
    if (!data_beta.empty()) out["data.beta"] = join(data_beta);
    if (data_kind == DataKind::Logistic) out["data.classes"] = std::to_string(data_classes);
    if (!data_path.empty()) out["data.path"] = data_path;
    out["split.train"] = fmt(split.train);
    out["split.calib"] = fmt(split.calib);
    out["split.test"] = fmt(split.test);
    const char* model_kinds[] = {"linear", "quantile", "logistic_oracle"};
    out["model.kind"] = model_kinds[static_cast<int>(model_kind)];
    out["model.bias"] = fmt(model_bias);
    out["score.kind"] = to_string(score_kind);
    std::string ms;
    for (const std::string& m : methods) {
        if (!ms.empty()) ms += ',';
        ms += m;
    }
    out["methods"] = ms;
    out["alpha"] = join(alphas);
    out["pt.p"] = join(pt_p);
    out["pt.mode"] = pt_two_level_mode ? "two_level" : "null";
    if (pt_two_level_mode) out["pt.alpha1"] = fmt(pt_alpha1);
    out["trials"] = std::to_string(trials);
    out["repeats"] = std::to_string(repeats);
    out["seed"] = std::to_string(seed);
    return out;
}

namespace {

std::vector<double> default_beta(int dim) {
    std::vector<double> beta(dim);
    for (int i = 0; i < dim; ++i) beta[i] = i % 2 == 0 ? 1.0 : -1.0;
    return beta;
}

SynthSpec synth_spec_of(const ExperimentConfig& cfg, RngStream& rng) {
    SynthSpec spec;
    spec.n = cfg.data_n;
    spec.beta = cfg.data_beta.empty() ? default_beta(cfg.data_dim) : cfg.data_beta;
    switch (cfg.data_kind) {
    case ExperimentConfig::DataKind::Mixture:
        spec.kind = SynthSpec::Kind::MixtureLinear;
        spec.mu = cfg.data_mu;
        break;
    case ExperimentConfig::DataKind::Gaussian:
        spec.kind = SynthSpec::Kind::GaussianLinear;
        spec.sigma = cfg.data_sigma;
        break;
    case ExperimentConfig::DataKind::Logistic: {
        spec.kind = SynthSpec::Kind::LogisticClasses;
        spec.class_weights.assign(cfg.data_classes, std::vector<double>(cfg.data_dim, 0.0));
        for (auto& row : spec.class_weights) {
            for (double& w : row) w = standard_normal(rng);
        }
        break;
    }
    case ExperimentConfig::DataKind::Csv:
        throw ConfigError("data.kind: csv data is not synthesized");
    }
    return spec;
}

struct TrialFit {
    std::shared_ptr<const FittedModel> model;
    CalibratedPredictor calibrated;
};

// Data, fitted models, and calibrations for one trial.
struct Trial {
    Dataset train, calib, test;
    std::optional<TrialFit> base;      // model.kind + score.kind methods
    std::optional<TrialFit> quantile;  // cqr / pt_cqr methods
};

Trial prepare_trial(const ExperimentConfig& cfg, std::uint64_t trial_index) {
    RngStream trial_rng(RngStream::mix_seed(cfg.seed, trial_index));

    Dataset data;
    std::optional<SynthSpec> synth;
    if (cfg.data_kind == ExperimentConfig::DataKind::Csv) {
        data = read_csv_file(cfg.data_path);
    } else {
        RngStream spec_rng = trial_rng.child(0);
        synth = synth_spec_of(cfg, spec_rng);
        RngStream gen_rng = trial_rng.child(1);
        data = generate(*synth, gen_rng);
    }

    Trial trial;
    RngStream split_rng = trial_rng.child(2);
    std::tie(trial.train, trial.calib, trial.test) = split_dataset(data, cfg.split, split_rng);

    const bool need_base = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                       [](const std::string& m) {
                                           return m == "vcp" || m == "pt" || m == "pt_two_level";
                                       });
    const bool need_quantile = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                           [](const std::string& m) {
                                               return m == "cqr" || m == "pt_cqr";
                                           });

    if (need_base) {
        FittedModel model;
        ScoreFn fn;
        switch (cfg.model_kind) {
        case ExperimentConfig::ModelKind::Linear:
            model = inject_bias(fit_linear_mean(trial.train), cfg.model_bias);
            fn = cfg.score_kind == ScoreKind::NormalizedResidual
                     ? ScoreFn::normalized(std::make_shared<FittedModel>(
                           FittedModel{LinearMean{std::vector<double>(trial.train.dim(), 0.0), 0.0}, 1.0}))
                     : ScoreFn::abs_residual();
            break;
        case ExperimentConfig::ModelKind::Quantile:
            model = inject_bias(fit_linear_quantile(trial.train, cfg.tau_lo, cfg.tau_hi,
                                                    cfg.quantile_steps, cfg.quantile_lr),
                                cfg.model_bias);
            fn = ScoreFn::cqr();
            break;
        case ExperimentConfig::ModelKind::LogisticOracle: {
            Logistic oracle;
            oracle.weights = synth ? synth->class_weights
                                   : std::vector<std::vector<double>>{};
            if (oracle.weights.empty()) throw ConfigError("model.kind: no oracle weights available");
            oracle.intercepts.assign(oracle.weights.size(), 0.0);
            oracle.bias_class_lo = cfg.bias_class_lo;
            oracle.bias_class_hi = cfg.bias_class_hi;
            model = inject_bias(FittedModel{oracle, 0.0}, cfg.model_bias);
            fn = ScoreFn::softmax();
            break;
        }
        }
        auto shared = std::make_shared<const FittedModel>(std::move(model));
        TrialFit fit{shared, calibrate(shared, fn, trial.calib)};
        trial.base = std::move(fit);
    }
    if (need_quantile) {
        FittedModel model = inject_bias(fit_linear_quantile(trial.train, cfg.tau_lo, cfg.tau_hi,
                                                            cfg.quantile_steps, cfg.quantile_lr),
                                        cfg.model_bias);
        auto shared = std::make_shared<const FittedModel>(std::move(model));
        TrialFit fit{shared, calibrate(shared, ScoreFn::cqr(), trial.calib)};
        trial.quantile = std::move(fit);
    }
    return trial;
}

const CalibratedPredictor& predictor_for(const Trial& trial, const std::string& method) {
    if (method == "cqr" || method == "pt_cqr") return trial.quantile->calibrated;
    return trial.base->calibrated;
}

struct Cell {
    std::string method;
    double alpha;
    double p; // 1.0 for deterministic methods
};

std::vector<Cell> sweep_cells(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    for (const std::string& m : cfg.methods) {
        for (double alpha : cfg.alphas) {
            if (is_pt_method(m)) {
                for (double p : cfg.pt_p) cells.push_back({m, alpha, p});
            } else {
                cells.push_back({m, alpha, 1.0});
            }
        }
    }
    return cells;
}

AuditReport run_cell(const ExperimentConfig& cfg, const Trial& trial, const Cell& cell,
                     std::uint64_t trial_index, std::size_t cell_index, bool with_stability) {
    const CalibratedPredictor& cp = predictor_for(trial, cell.method);
    const Level level(cell.alpha);

    PTPredictor pt;
    Predictor predictor;
    if (is_pt_method(cell.method)) {
        pt.base = cp;
        pt.config.p = cell.p;
        pt.config.target_alpha = cell.alpha;
        if (cell.method == "pt_two_level" || cfg.pt_two_level_mode) {
            pt.config.mode = PTConfig::Mode::TwoLevel;
            pt.config.alpha1 = cfg.pt_alpha1;
        }
        predictor = make_pt_predictor(pt);
    } else {
        predictor = make_vcp_predictor(cp, level);
    }

    // Evaluation streams keyed by (trial, cell) so reruns and reorderings
    // reproduce the same report.
    RngStream trial_rng(RngStream::mix_seed(cfg.seed, trial_index));
    RngStream eval_rng = trial_rng.child(1000 + cell_index);
    AuditReport report = evaluate(predictor, trial.test, level, eval_rng);
    report.method = cell.method;
    report.p = cell.p;
    report.seed = cfg.seed;

    if (with_stability) {
        RngStream stab_rng = trial_rng.child(5000 + cell_index);
        report.interval_stability =
            interval_stability(predictor, trial.test, level, cfg.repeats, stab_rng);
        report.stability_se = 0.0;
    }
    return report;
}

double mean_of(const std::vector<double>& xs) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

// Across-trial standard error: sample standard deviation / sqrt(trials).
double se_of(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1) /
                     static_cast<double>(xs.size()));
}

AuditReport aggregate(const std::vector<AuditReport>& per_trial) {
    AuditReport out = per_trial.front();
    out.trials = static_cast<int>(per_trial.size());

    std::vector<double> coverages, lengths, stabilities;
    bool any_infinite = false;
    bool has_stability = !std::isnan(per_trial.front().interval_stability);
    std::map<std::string, std::vector<double>> group_values;
    for (const AuditReport& r : per_trial) {
        coverages.push_back(r.coverage);
        if (std::isinf(r.mean_length)) any_infinite = true;
        else lengths.push_back(r.mean_length);
        if (has_stability) stabilities.push_back(r.interval_stability);
        for (const auto& [g, v] : r.group_coverage) group_values[g].push_back(v);
    }

    out.coverage = mean_of(coverages);
    out.coverage_se = se_of(coverages, out.coverage);
    if (any_infinite) {
        out.mean_length = kInf;
        out.length_se = kInf;
    } else {
        out.mean_length = mean_of(lengths);
        out.length_se = se_of(lengths, out.mean_length);
    }
    out.group_coverage.clear();
    out.min_group_coverage = out.coverage;
    for (const auto& [g, vs] : group_values) {
        const double m = mean_of(vs);
        out.group_coverage[g] = m;
        out.min_group_coverage = std::min(out.min_group_coverage, m);
    }
    if (has_stability) {
        out.interval_stability = mean_of(stabilities);
        out.stability_se = se_of(stabilities, out.interval_stability);
    }
    return out;
}

std::string reports_csv(const std::vector<AuditReport>& reports) {
    std::string out = report_csv_header();
    out += '\n';
    for (const AuditReport& r : reports) {
        out += report_csv_row(r);
        out += '\n';
    }
    return out;
}

nlohmann::ordered_json report_to_json(const AuditReport& r) {
    auto num = [](double v) -> nlohmann::ordered_json {
        if (std::isnan(v)) return nullptr;
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return v;
    };
    nlohmann::ordered_json j;
    j["method"] = r.method;
    j["alpha"] = num(r.alpha);
    j["p"] = num(r.p);
    j["coverage"] = num(r.coverage);
    j["coverage_se"] = num(r.coverage_se);
    j["mean_length"] = num(r.mean_length);
    j["mean_half_length"] = num(r.mean_length / 2.0);
    j["length_se"] = num(r.length_se);
    j["group_coverage"] = nlohmann::ordered_json::object();
    for (const auto& [g, v] : r.group_coverage) j["group_coverage"][g] = num(v);
    j["min_group_coverage"] = num(r.min_group_coverage);
    j["interval_stability"] = num(r.interval_stability);
    j["stability_se"] = num(r.stability_se);
    j["n_test"] = r.n_test;
    j["trials"] = r.trials;
    j["seed"] = r.seed;
    return j;
}

ExperimentResult run_sweep(const ExperimentConfig& cfg, bool with_stability) {
    cfg.validate();
    const std::vector<Cell> cells = sweep_cells(cfg);

    std::vector<std::vector<AuditReport>> per_cell(cells.size());
    std::vector<nlohmann::ordered_json> trial_json;
    for (int t = 0; t < cfg.trials; ++t) {
        const Trial trial = prepare_trial(cfg, static_cast<std::uint64_t>(t));
        nlohmann::ordered_json tj;
        tj["trial"] = t;
        tj["reports"] = nlohmann::ordered_json::array();
        for (std::size_t c = 0; c < cells.size(); ++c) {
            AuditReport r = run_cell(cfg, trial, cells[c], static_cast<std::uint64_t>(t), c,
                                     with_stability);
            tj["reports"].push_back(report_to_json(r));
            per_cell[c].push_back(std::move(r));
        }
        trial_json.push_back(std::move(tj));
    }

    ExperimentResult result;
    for (const auto& rs : per_cell) result.reports.push_back(aggregate(rs));
    result.csv = reports_csv(result.reports);

    nlohmann::ordered_json j;
    j["config"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.canonical()) j["config"][k] = v;
    j["reports"] = nlohmann::ordered_json::array();
    for (const AuditReport& r : result.reports) j["reports"].push_back(report_to_json(r));
    j["per_trial"] = trial_json;
    result.json = j.dump(2) + "\n";
    return result;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    return run_sweep(cfg, /*with_stability=*/false);
}

ExperimentResult run_audit(const ExperimentConfig& cfg) {
    return run_sweep(cfg, /*with_stability=*/true);
}

TheoryReport run_theory(const ExperimentConfig& cfg) {
    cfg.validate();
    const Trial trial = prepare_trial(cfg, 0);
    if (!trial.base && !trial.quantile) throw ConfigError("methods: nothing to calibrate");
    const CalibratedPredictor& cp = trial.base ? trial.base->calibrated
                                               : trial.quantile->calibrated;

    // Probe features come from the test fold; one point suffices for
    // x-independent scores but costs nothing to widen.
    std::vector<std::vector<double>> probes;
    const std::size_t n_probe = std::min<std::size_t>(trial.test.size(), 100);
    for (std::size_t i = 0; i < n_probe; ++i) probes.push_back(trial.test.samples[i].features);

    TheoryReport report;
    const std::vector<double> grid = default_level_grid();
    report.curve = build_length_curve(cp, grid, probes);

    std::string text;
    for (double alpha : cfg.alphas) {
        TheoryAlphaReport ar;
        ar.alpha = alpha;

        std::vector<double> p_grid;
        for (double p : cfg.pt_p) {
            if (p > 1.0 - alpha && p < 1.0) p_grid.push_back(p);
        }
        if (p_grid.empty()) {
            for (double p = 0.905; p < 0.9995; p += 0.01) {
                if (p > 1.0 - alpha) p_grid.push_back(p);
            }
        }
        std::vector<double> u_grid;
        for (double c : grid) {
            if (c > 1.0 - alpha + 1e-12 && c < 1.0) u_grid.push_back(c);
        }

        ar.general_best_p = check_general_condition(report.curve, alpha, p_grid);
        ar.first_order = check_first_order(report.curve, alpha, cfg.theory_h);
        ar.secant = check_secant(report.curve, alpha, u_grid);
        ar.locally_concave = check_local_concavity(report.curve, alpha);
        if (cfg.data_kind == ExperimentConfig::DataKind::Gaussian) {
            for (double p : p_grid) ar.gaussian.emplace_back(p, gaussian_failure_case(alpha, p));
        }

        char buf[160];
        std::snprintf(buf, sizeof(buf), "alpha=%g general=%s first_order=%s secant=%s concave=%s\n",
                      alpha,
                      ar.general_best_p ? ("p=" + std::to_string(*ar.general_best_p)).c_str() : "none",
                      to_string(ar.first_order).c_str(),
                      ar.secant ? ("u=" + std::to_string(ar.secant->u)).c_str() : "none",
                      ar.locally_concave ? "yes" : "no");
        text += buf;
        for (const auto& [p, g] : ar.gaussian) {
            std::snprintf(buf, sizeof(buf),
                          "  gaussian p=%g base_length=%.6f wrapped_length=%.6f wrapped_longer=%s\n",
                          p, g.vcp_length, g.pt_expected_length,
                          g.pt_expected_length > g.vcp_length ? "yes" : "no");
            text += buf;
        }
        report.per_alpha.push_back(std::move(ar));
    }
    report.text = std::move(text);
    return report;
}

std::vector<std::pair<double, double>> run_quantile(const ExperimentConfig& cfg) {
    cfg.validate();
    const Trial trial = prepare_trial(cfg, 0);
    const CalibratedPredictor& cp = trial.base ? trial.base->calibrated
                                               : trial.quantile->calibrated;
    std::vector<std::pair<double, double>> out;
    for (double alpha : cfg.alphas) {
        out.emplace_back(alpha, vcp_threshold(cp, Level(alpha)));
    }
    return out;
}

} // namespace cpkit
