#include "cpkit/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cpkit/errors.hpp"

namespace cpkit {

int Dataset::dim() const {
    return samples.empty() ? 0 : static_cast<int>(samples.front().features.size());
}

bool Dataset::has_groups() const {
    return !samples.empty() && samples.front().group.has_value();
}

void Dataset::validate() const {
    if (samples.empty()) throw DataError("dataset is empty");
    const std::size_t d = samples.front().features.size();
    if (d == 0) throw DataError("feature dimension must be >= 1");
    const bool grouped = samples.front().group.has_value();
    for (const Sample& s : samples) {
        if (s.features.size() != d) throw DataError("inconsistent feature dimension");
        if (s.group.has_value() != grouped) {
            throw DataError("group tags must be present on all samples or none");
        }
    }
}

namespace {

// Largest-remainder apportionment of n into three parts.
std::array<std::size_t, 3> fold_sizes(std::size_t n, SplitFractions f) {
    const double fr[3] = {f.train, f.calib, f.test};
    for (double x : fr) {
        if (!(x > 0.0)) throw DomainError("split fractions must be positive");
    }
    if (std::abs(fr[0] + fr[1] + fr[2] - 1.0) > 1e-9) {
        throw DomainError("split fractions must sum to 1");
    }
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double quota = static_cast<double>(n) * fr[i];
        sizes[i] = static_cast<std::size_t>(std::floor(quota));
        remainder[i] = quota - std::floor(quota);
        assigned += sizes[i];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) {
        sizes[order[k % 3]] += 1;
    }
    return sizes;
}

} // namespace

std::tuple<Dataset, Dataset, Dataset>
split_dataset(const Dataset& data, SplitFractions fractions, RngStream& rng) {
    data.validate();
    const std::size_t n = data.size();
    if (n < 3) throw EmptyPartition("need at least 3 samples to split");

    const auto sizes = fold_sizes(n, fractions);
    if (sizes[0] == 0 || sizes[1] == 0 || sizes[2] == 0) {
        throw EmptyPartition("a split fold would receive zero samples");
    }

    // Fisher-Yates permutation of sample indices.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = rng.next_u64() % (i + 1);
        std::swap(idx[i], idx[j]);
    }

    Dataset folds[3];
    const FoldRole roles[3] = {FoldRole::Train, FoldRole::Calibration, FoldRole::Test};
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
        folds[k].task = data.task;
        folds[k].role = roles[k];
        folds[k].samples.reserve(sizes[k]);
        for (std::size_t i = 0; i < sizes[k]; ++i) {
            folds[k].samples.push_back(data.samples[idx[pos++]]);
        }
    }
    return {std::move(folds[0]), std::move(folds[1]), std::move(folds[2])};
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t row) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || ptr != e) {
        throw DataError("row " + std::to_string(row) + ": bad numeric value '" + s + "'");
    }
    return v;
}

void format_double(std::string& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

} // namespace

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty csv input");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_line(line);
    std::size_t d = 0;
    while (d < header.size() && header[d] == "f" + std::to_string(d)) ++d;
    if (d == 0) throw DataError("csv header must start with f0");
    if (d >= header.size()) throw DataError("csv header missing response column");

    Dataset data;
    std::size_t col = d;
    if (header[col] == "target") {
        data.task = TaskType::Regression;
    } else if (header[col] == "label") {
        data.task = TaskType::Classification;
    } else {
        throw DataError("expected 'target' or 'label' after feature columns");
    }
    ++col;
    bool grouped = false;
    if (col < header.size()) {
        if (header[col] != "group") throw DataError("unexpected trailing csv column '" + header[col] + "'");
        grouped = true;
        ++col;
    }
    if (col != header.size()) throw DataError("unexpected extra csv columns");

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " columns, got " +
                            std::to_string(cells.size()));
        }
        Sample s;
        s.features.reserve(d);
        for (std::size_t i = 0; i < d; ++i) s.features.push_back(parse_double(cells[i], row));
        if (data.task == TaskType::Regression) {
            s.target = parse_double(cells[d], row);
        } else {
            const double v = parse_double(cells[d], row);
            if (v < 0 || v != std::floor(v)) {
                throw DataError("row " + std::to_string(row) + ": label must be a nonnegative integer");
            }
            s.label = static_cast<int>(v);
        }
        if (grouped) s.group = cells[d + 1];
        data.samples.push_back(std::move(s));
    }
    data.validate();
    return data;
}

Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_csv(in);
}

void write_csv(const Dataset& data, std::ostream& out) {
    data.validate();
    const int d = data.dim();
    std::string buf;
    for (int i = 0; i < d; ++i) {
        if (i) buf += ',';
        buf += "f" + std::to_string(i);
    }
    buf += data.task == TaskType::Regression ? ",target" : ",label";
    if (data.has_groups()) buf += ",group";
    buf += '\n';
    for (const Sample& s : data.samples) {
        for (int i = 0; i < d; ++i) {
            if (i) buf += ',';
            format_double(buf, s.features[i]);
        }
        buf += ',';
        if (data.task == TaskType::Regression) {
            format_double(buf, s.target);
        } else {
            buf += std::to_string(s.label);
        }
        if (data.has_groups()) {
            buf += ',';
            buf += *s.group;
        }
        buf += '\n';
    }
    out << buf;
}

void write_csv_file(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_csv(data, out);
}

} // namespace cpkit
