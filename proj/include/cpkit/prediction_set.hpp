#pragma once

#include <vector>

namespace cpkit {

// Set-valued prediction: a real interval, a finite label set, or the empty
// real set. Measure is interval width, label cardinality, or zero.
class PredictionSet {
public:
    enum class Kind { Interval, LabelSet, Null };

    static PredictionSet interval(double lo, double hi);
    static PredictionSet singleton(double point) { return interval(point, point); }
    static PredictionSet full_line();
    static PredictionSet label_set(std::vector<int> labels);
    static PredictionSet null_set();

    Kind kind() const { return kind_; }
    bool is_interval() const { return kind_ == Kind::Interval; }
    bool is_label_set() const { return kind_ == Kind::LabelSet; }
    bool is_null() const { return kind_ == Kind::Null; }

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const std::vector<int>& labels() const { return labels_; }

    double measure() const;

    bool contains(double y) const;
    bool contains_label(int label) const;

    bool operator==(const PredictionSet& other) const;

private:
    PredictionSet() = default;

    Kind kind_ = Kind::Null;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::vector<int> labels_; // sorted ascending
};

} // namespace cpkit
