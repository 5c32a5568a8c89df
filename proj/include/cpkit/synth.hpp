#pragma once

#include <cstdint>
#include <vector>

#include "cpkit/data.hpp"
#include "cpkit/rng.hpp"

namespace cpkit {

// Synthetic data family. Features are always standard normal vectors.
//   MixtureLinear:   y = x . beta + eps, eps ~ N(+-mu, 1) with equal odds
//   GaussianLinear:  y = x . beta + eps, eps ~ N(0, sigma^2)
//   LogisticClasses: label ~ Categorical(softmax(W x))
struct SynthSpec {
    enum class Kind { MixtureLinear, GaussianLinear, LogisticClasses };

    Kind kind = Kind::MixtureLinear;
    std::vector<double> beta = {1.0, -1.0}; // regression coefficients, length d
    double mu = 20.0;                       // mixture center offset
    double sigma = 1.0;                     // gaussian noise scale
    std::vector<std::vector<double>> class_weights; // logistic, classes x d
    std::size_t n = 1000;
    std::uint64_t seed = 0;

    int dim() const;
    void validate() const;
};

/// Standard normal draw by inverse-CDF transform of one uniform, so every
/// generator consumes the stream at a fixed rate.
double standard_normal(RngStream& rng);

Dataset generate(const SynthSpec& spec, RngStream& rng);

// Convenience overload seeding a fresh stream from spec.seed.
Dataset generate(const SynthSpec& spec);

} // namespace cpkit
