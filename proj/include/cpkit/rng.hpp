#pragma once

#include <cstdint>

namespace cpkit {

// Counter-based pseudo-random stream. The t-th draw is a pure function of
// (seed, t), so sequences replay identically across platforms and runs.
// Derived child streams are keyed by index and never overlap in practice;
// a stream is single-owner, concurrent use requires splitting first.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() {
        return finalize(seed_ + kGamma * ++counter_);
    }

    // Uniform draw in [0, 1) from the top 53 bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Child stream for the given index; independent of the parent's counter.
    RngStream child(std::uint64_t index) const {
        return RngStream(mix_seed(seed_, index));
    }

    static std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
        return finalize(seed ^ finalize(index + 0x632be59bd9b4e019ull));
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace cpkit
