#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "cpkit/rng.hpp"

namespace cpkit {

enum class TaskType { Regression, Classification };

enum class FoldRole { None, Train, Calibration, Test };

struct Sample {
    std::vector<double> features;
    double target = 0.0; // regression response
    int label = 0;       // classification response
    std::optional<std::string> group;
};

// Ordered sample collection. All feature vectors share one dimension and
// group tags are either absent everywhere or present everywhere.
struct Dataset {
    std::vector<Sample> samples;
    TaskType task = TaskType::Regression;
    FoldRole role = FoldRole::None;

    std::size_t size() const { return samples.size(); }
    int dim() const;
    bool has_groups() const;
    void validate() const;
};

struct SplitFractions {
    double train;
    double calib;
    double test;
};

// Seeded permutation split into (train, calibration, test). Fold sizes use
// largest-remainder rounding; throws EmptyPartition when a fold receives
// zero samples.
std::tuple<Dataset, Dataset, Dataset>
split_dataset(const Dataset& data, SplitFractions fractions, RngStream& rng);

// CSV layout: header "f0,..,f{d-1}" then "target" (regression) or "label"
// (classification), then optionally "group". UTF-8, '.' decimal separator.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);
void write_csv(const Dataset& data, std::ostream& out);
void write_csv_file(const Dataset& data, const std::string& path);

} // namespace cpkit
