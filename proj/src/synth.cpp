#include "cpkit/synth.hpp"

#include <cmath>

#include "cpkit/errors.hpp"
#include "cpkit/normal.hpp"

namespace cpkit {

int SynthSpec::dim() const {
    if (kind == Kind::LogisticClasses) {
        return class_weights.empty() ? 0 : static_cast<int>(class_weights.front().size());
    }
    return static_cast<int>(beta.size());
}

void SynthSpec::validate() const {
    if (n < 1) throw DomainError("synthetic sample count must be >= 1");
    if (kind == Kind::LogisticClasses) {
        if (class_weights.size() < 2) throw DomainError("need at least 2 classes");
        for (const auto& row : class_weights) {
            if (static_cast<int>(row.size()) != dim() || row.empty()) {
                throw DomainError("class weight rows must share one dimension >= 1");
            }
        }
        return;
    }
    if (beta.empty()) throw DomainError("beta must have dimension >= 1");
    if (kind == Kind::MixtureLinear && mu < 0.0) throw DomainError("mu must be >= 0");
    if (kind == Kind::GaussianLinear && !(sigma > 0.0)) throw DomainError("sigma must be > 0");
}

double standard_normal(RngStream& rng) {
    // Shift the 53-bit uniform off 0 so the inverse CDF stays finite.
    const double u = (static_cast<double>(rng.next_u64() >> 11) + 0.5) * 0x1.0p-53;
    return std_normal_inv_cdf(u);
}

Dataset generate(const SynthSpec& spec, RngStream& rng) {
    spec.validate();
    const int d = spec.dim();

    Dataset data;
    data.task = spec.kind == SynthSpec::Kind::LogisticClasses ? TaskType::Classification
                                                              : TaskType::Regression;
    data.samples.reserve(spec.n);

    for (std::size_t i = 0; i < spec.n; ++i) {
        Sample s;
        s.features.resize(d);
        for (int j = 0; j < d; ++j) s.features[j] = standard_normal(rng);

        switch (spec.kind) {
        case SynthSpec::Kind::MixtureLinear: {
            const double center = rng.uniform() < 0.5 ? spec.mu : -spec.mu;
            double y = center + standard_normal(rng);
            for (int j = 0; j < d; ++j) y += spec.beta[j] * s.features[j];
            s.target = y;
            break;
        }
        case SynthSpec::Kind::GaussianLinear: {
            double y = spec.sigma * standard_normal(rng);
            for (int j = 0; j < d; ++j) y += spec.beta[j] * s.features[j];
            s.target = y;
            break;
        }
        case SynthSpec::Kind::LogisticClasses: {
            const int k = static_cast<int>(spec.class_weights.size());
            std::vector<double> logits(k, 0.0);
            double top = -1e300;
            for (int c = 0; c < k; ++c) {
                for (int j = 0; j < d; ++j) logits[c] += spec.class_weights[c][j] * s.features[j];
                top = std::max(top, logits[c]);
            }
            double z = 0.0;
            for (double& v : logits) {
                v = std::exp(v - top);
                z += v;
            }
            const double u = rng.uniform() * z;
            double acc = 0.0;
            s.label = k - 1;
            for (int c = 0; c < k; ++c) {
                acc += logits[c];
                if (u < acc) {
                    s.label = c;
                    break;
                }
            }
            break;
        }
        }
        data.samples.push_back(std::move(s));
    }
    return data;
}

Dataset generate(const SynthSpec& spec) {
    RngStream rng(spec.seed);
    return generate(spec, rng);
}

} // namespace cpkit
