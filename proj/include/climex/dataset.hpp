#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "climex/errors.hpp"
#include "climex/linalg.hpp"
#include "climex/rng.hpp"

namespace climex {

/// Feature matrix plus binary labels, per-feature normalization statistics
/// (computed from the train split only) and the train/test index lists.
/// Immutable after construction.
struct Dataset {
    Matrix features;             // N×d
    Vector labels;               // N entries in {0,1}
    std::vector<std::string> feature_names;
    std::vector<double> norm_mean; // empty until split_and_normalize
    std::vector<double> norm_std;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
};

/// Two-cluster simulated classification data: y uniform in {0,1},
/// x ~ N(mu_y, I_2) with mu_0 = [-1,-1] and mu_1 = [1,1].
inline Dataset generate_simulated(std::size_t n, std::uint64_t seed) {
    if (n < 2) throw ConfigError("generate_simulated: need n >= 2");
    GaussianStream stream(seed);
    Dataset data;
    data.features = Matrix(n, 2);
    data.labels.resize(n);
    data.feature_names = {"x1", "x2"};
    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = stream.next_bit();
        const double mu = positive ? 1.0 : -1.0;
        data.labels[i] = positive ? 1.0 : 0.0;
        data.features(i, 0) = mu + stream.next();
        data.features(i, 1) = mu + stream.next();
    }
    return data;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    // RFC-4180 style: quoted fields may contain commas and doubled quotes.
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_real(const std::string& field, std::size_t line_no, const std::string& column) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || begin == end)
        throw ParseError("CSV line " + std::to_string(line_no) + ": cannot parse '" + field +
                         "' in column '" + column + "' as a real number");
    return value;
}

} // namespace detail

/// Load a header-first CSV, drop the named columns, parse the rest as real
/// features and the target column as a binary {0,1} label.
inline Dataset load_csv(const std::string& path, const std::string& target_column,
                        const std::vector<std::string>& drop_columns = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("load_csv: empty file " + path);
    const auto header = detail::split_csv_line(line);

    std::ptrdiff_t target_idx = -1;
    std::vector<bool> keep(header.size(), true);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == target_column) {
            target_idx = static_cast<std::ptrdiff_t>(i);
            keep[i] = false;
        } else if (std::find(drop_columns.begin(), drop_columns.end(), header[i]) !=
                   drop_columns.end()) {
            keep[i] = false;
        }
    }
    if (target_idx < 0)
        throw ParseError("load_csv: target column '" + target_column + "' not in header");

    Dataset data;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (keep[i]) data.feature_names.push_back(header[i]);

    std::vector<double> values;
    std::size_t n_rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("CSV line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (!keep[i]) continue;
            values.push_back(detail::parse_real(fields[i], line_no, header[i]));
        }
        const double y =
            detail::parse_real(fields[static_cast<std::size_t>(target_idx)], line_no, target_column);
        if (y != 0.0 && y != 1.0)
            throw NonBinaryTarget("CSV line " + std::to_string(line_no) + ": target value " +
                                  std::to_string(y) + " is not 0 or 1");
        data.labels.push_back(y);
        ++n_rows;
    }

    data.features.rows = n_rows;
    data.features.cols = data.feature_names.size();
    data.features.data = std::move(values);
    return data;
}

/// Shuffle deterministically, assign the first `train_fraction` to the train
/// split, compute per-feature mean/std on the train split only and transform
/// every row as (v − mean)/std.
inline Dataset split_and_normalize(const Dataset& input, double train_fraction,
                                   std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("split_and_normalize: train_fraction must be in (0,1)");

    const std::size_t n = input.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Xoshiro256pp rng(seed);
    for (std::size_t i = n; i-- > 1;)
        std::swap(order[i], order[rng() % (i + 1)]);

    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    if (n_train < 2 || n - n_train < 2)
        throw ConfigError("split_and_normalize: need at least 2 rows in each split");

    Dataset out = input;
    out.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

    const std::size_t d = input.dim();
    out.norm_mean.assign(d, 0.0);
    out.norm_std.assign(d, 0.0);
    for (std::size_t idx : out.train_indices)
        for (std::size_t c = 0; c < d; ++c) out.norm_mean[c] += input.features(idx, c);
    for (double& m : out.norm_mean) m /= static_cast<double>(n_train);
    for (std::size_t idx : out.train_indices)
        for (std::size_t c = 0; c < d; ++c) {
            const double delta = input.features(idx, c) - out.norm_mean[c];
            out.norm_std[c] += delta * delta;
        }
    for (std::size_t c = 0; c < d; ++c) {
        out.norm_std[c] = std::sqrt(out.norm_std[c] / static_cast<double>(n_train));
        if (out.norm_std[c] <= 1e-12)
            throw DegenerateFeature("split_and_normalize: feature '" + input.feature_names[c] +
                                    "' is constant on the train split");
    }

    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c)
            out.features(r, c) = (input.features(r, c) - out.norm_mean[c]) / out.norm_std[c];
    return out;
}

} // namespace climex
