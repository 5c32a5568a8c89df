// Command-line front end: synth | experiment | audit | theory | quantile.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cpkit/data.hpp"
#include "cpkit/errors.hpp"
#include "cpkit/experiment.hpp"
#include "cpkit/synth.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void emit(const std::string& content, const std::string& path) {
    if (path.empty()) return;
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cpkit::DataError("cannot write '" + path + "'");
    out << content;
}

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* opt = cmd->add_option("--config", args.config_path, "configuration file");
    if (config_required) opt->required();
    cmd->add_option("--out", args.out_path, "output path ('-' for stdout)");
    cmd->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
        args.seed_set = true;
    });
}

cpkit::ExperimentConfig load_config(const CommonArgs& args) {
    cpkit::ExperimentConfig cfg = cpkit::ExperimentConfig::parse_file(args.config_path);
    if (args.seed_set) cfg.seed = args.seed;
    if (!args.out_path.empty()) cfg.out_csv = args.out_path;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conformal prediction toolkit"};
    app.require_subcommand(1);

    CommonArgs synth_args, exp_args, audit_args, theory_args, quantile_args;
    bool group_by_sign = false;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset as CSV");
    add_common(synth, synth_args, true);
    synth->add_flag("--group-by-sign", group_by_sign,
                    "tag each row with the sign of its first feature as a group");

    CLI::App* experiment = app.add_subcommand("experiment", "coverage/length sweep");
    add_common(experiment, exp_args, true);

    CLI::App* audit = app.add_subcommand("audit", "interval-stability sweep");
    add_common(audit, audit_args, true);

    CLI::App* theory = app.add_subcommand("theory", "length-curve condition checkers");
    add_common(theory, theory_args, true);

    CLI::App* quantile = app.add_subcommand("quantile", "print calibration thresholds");
    add_common(quantile, quantile_args, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            cpkit::ExperimentConfig cfg = load_config(synth_args);
            cpkit::RngStream rng(cpkit::RngStream::mix_seed(cfg.seed, 0));
            cpkit::RngStream spec_rng = rng.child(0);
            cpkit::SynthSpec spec;
            spec.n = cfg.data_n;
            spec.beta = cfg.data_beta;
            if (spec.beta.empty()) {
                spec.beta.resize(cfg.data_dim);
                for (int i = 0; i < cfg.data_dim; ++i) spec.beta[i] = i % 2 == 0 ? 1.0 : -1.0;
            }
            switch (cfg.data_kind) {
            case cpkit::ExperimentConfig::DataKind::Mixture:
                spec.kind = cpkit::SynthSpec::Kind::MixtureLinear;
                spec.mu = cfg.data_mu;
                break;
            case cpkit::ExperimentConfig::DataKind::Gaussian:
                spec.kind = cpkit::SynthSpec::Kind::GaussianLinear;
                spec.sigma = cfg.data_sigma;
                break;
            case cpkit::ExperimentConfig::DataKind::Logistic: {
                spec.kind = cpkit::SynthSpec::Kind::LogisticClasses;
                spec.class_weights.assign(cfg.data_classes,
                                          std::vector<double>(cfg.data_dim, 0.0));
                for (auto& row : spec.class_weights) {
                    for (double& w : row) w = cpkit::standard_normal(spec_rng);
                }
                break;
            }
            case cpkit::ExperimentConfig::DataKind::Csv:
                throw cpkit::ConfigError("data.kind: synth cannot use csv input");
            }
            cpkit::RngStream gen_rng = rng.child(1);
            cpkit::Dataset data = cpkit::generate(spec, gen_rng);
            if (group_by_sign) {
                for (cpkit::Sample& s : data.samples) {
                    s.group = s.features.front() >= 0.0 ? "pos" : "neg";
                }
            }
            std::ostringstream buf;
            cpkit::write_csv(data, buf);
            emit(buf.str(), synth_args.out_path.empty() ? "-" : synth_args.out_path);
        } else if (experiment->parsed()) {
            cpkit::ExperimentConfig cfg = load_config(exp_args);
            cpkit::ExperimentResult result = cpkit::run_experiment(cfg);
            emit(result.csv, cfg.out_csv.empty() ? "-" : cfg.out_csv);
            emit(result.json, cfg.out_json);
        } else if (audit->parsed()) {
            cpkit::ExperimentConfig cfg = load_config(audit_args);
            cpkit::ExperimentResult result = cpkit::run_audit(cfg);
            emit(result.csv, cfg.out_csv.empty() ? "-" : cfg.out_csv);
            emit(result.json, cfg.out_json);
        } else if (theory->parsed()) {
            cpkit::ExperimentConfig cfg = load_config(theory_args);
            cpkit::TheoryReport report = cpkit::run_theory(cfg);
            std::cout << report.text;
            if (!cfg.out_csv.empty()) emit(cpkit::curve_csv(report.curve), cfg.out_csv);
        } else if (quantile->parsed()) {
            cpkit::ExperimentConfig cfg = load_config(quantile_args);
            for (const auto& [alpha, threshold] : cpkit::run_quantile(cfg)) {
                std::printf("alpha=%g threshold=%g\n", alpha, threshold);
            }
        }
    } catch (const cpkit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cpkit::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const cpkit::EmptyPartition& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const cpkit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
