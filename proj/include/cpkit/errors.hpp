#pragma once

#include <stdexcept>
#include <string>

namespace cpkit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dataset splitting would leave a fold with zero samples.
struct EmptyPartition : Error { using Error::Error; };

// Calibration attempted with no scores.
struct EmptyScores : Error { using Error::Error; };

// Scale estimate sigma(x) <= 0 in a normalized score.
struct ScaleUnderflow : Error { using Error::Error; };

// Least-squares design matrix is singular even after ridge regularization.
struct SingularDesign : Error { using Error::Error; };

// Iterative fit produced a non-finite loss.
struct Diverged : Error { using Error::Error; };

struct DimensionMismatch : Error { using Error::Error; };

// Keep probability p outside (1 - alpha, 1].
struct InvalidKeepProbability : Error { using Error::Error; };

// A repeated prediction had infinite measure; its variance is undefined.
struct InfiniteMeasure : Error { using Error::Error; };

// A tabulated curve does not cover the level an operation needs.
struct GridTooCoarse : Error { using Error::Error; };

struct DomainError : Error { using Error::Error; };

// Bad experiment configuration; message carries the offending key path.
struct ConfigError : Error { using Error::Error; };

// I/O or malformed dataset file.
struct DataError : Error { using Error::Error; };

} // namespace cpkit
