#include "cpkit/prediction_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpkit/errors.hpp"

namespace cpkit {

PredictionSet PredictionSet::interval(double lo, double hi) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
        throw DomainError("interval bounds must satisfy lo <= hi");
    }
    PredictionSet s;
    s.kind_ = Kind::Interval;
    s.lo_ = lo;
    s.hi_ = hi;
    return s;
}

PredictionSet PredictionSet::full_line() {
    const double inf = std::numeric_limits<double>::infinity();
    return interval(-inf, inf);
}

PredictionSet PredictionSet::label_set(std::vector<int> labels) {
    PredictionSet s;
    s.kind_ = Kind::LabelSet;
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    s.labels_ = std::move(labels);
    return s;
}

PredictionSet PredictionSet::null_set() {
    return PredictionSet();
}

double PredictionSet::measure() const {
    switch (kind_) {
    case Kind::Interval:
        return hi_ - lo_; // +inf propagates for the full line
    case Kind::LabelSet:
        return static_cast<double>(labels_.size());
    case Kind::Null:
        return 0.0;
    }
    return 0.0;
}

bool PredictionSet::contains(double y) const {
    return kind_ == Kind::Interval && lo_ <= y && y <= hi_;
}

bool PredictionSet::contains_label(int label) const {
    return kind_ == Kind::LabelSet &&
           std::binary_search(labels_.begin(), labels_.end(), label);
}

bool PredictionSet::operator==(const PredictionSet& other) const {
    if (kind_ != other.kind_) return false;
    switch (kind_) {
    case Kind::Interval:
        return lo_ == other.lo_ && hi_ == other.hi_;
    case Kind::LabelSet:
        return labels_ == other.labels_;
    case Kind::Null:
        return true;
    }
    return false;
}

} // namespace cpkit
