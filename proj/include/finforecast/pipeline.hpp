#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "finforecast/errors.hpp"
#include "finforecast/indicators.hpp"

namespace finforecast {

/// Per-column min/max recorded over a fit range; maps values to [0,1]
/// on that range via (x - min) / (max - min).
struct Scaler {
    std::vector<std::string> columns;
    std::vector<double> mins, maxs;

    std::size_t find(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw ColumnMismatch("scaler has no column: " + name);
    }
};

/// Records min/max per column over frame rows [begin, end).
inline Scaler fit_scaler(const FeatureFrame& frame, std::size_t begin, std::size_t end) {
    if (begin >= end || end > frame.rows()) throw Error("fit_scaler: empty or invalid fit range");
    Scaler scaler;
    scaler.columns = frame.names;
    for (std::size_t c = 0; c < frame.cols(); ++c) {
        double lo = frame.columns[c][begin], hi = lo;
        for (std::size_t r = begin; r < end; ++r) {
            lo = std::min(lo, frame.columns[c][r]);
            hi = std::max(hi, frame.columns[c][r]);
        }
        if (hi == lo) throw ConstantColumn("column '" + frame.names[c] + "' is constant over the fit range");
        scaler.mins.push_back(lo);
        scaler.maxs.push_back(hi);
    }
    return scaler;
}

/// Applies the scaler column-wise. Values outside the fitted range map
/// outside [0,1] and are not clipped.
inline FeatureFrame transform(const FeatureFrame& frame, const Scaler& scaler) {
    if (frame.names != scaler.columns) throw ColumnMismatch("transform: frame columns differ from scaler");
    FeatureFrame out = frame;
    for (std::size_t c = 0; c < frame.cols(); ++c) {
        const double lo = scaler.mins[c], range = scaler.maxs[c] - scaler.mins[c];
        for (double& v : out.columns[c]) v = (v - lo) / range;
    }
    return out;
}

inline double inverse_transform(double value, const Scaler& scaler, const std::string& column) {
    const std::size_t c = scaler.find(column);
    return value * (scaler.maxs[c] - scaler.mins[c]) + scaler.mins[c];
}

inline std::vector<double> inverse_transform(std::span<const double> values, const Scaler& scaler,
                                             const std::string& column) {
    const std::size_t c = scaler.find(column);
    const double lo = scaler.mins[c], range = scaler.maxs[c] - scaler.mins[c];
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * range + lo;
    return out;
}

struct IndexRange {
    std::size_t begin = 0, end = 0;
    std::size_t count() const { return end - begin; }
};

/// Sliding-window pairs: X[i] covers frame rows i..i+W-1 (all F columns,
/// row-major W x F) and y[i] is the target column at row i+W.
struct WindowedDataset {
    std::size_t W = 0, F = 0;
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    std::vector<std::size_t> target_rows;   // frame row index of each y
    std::vector<std::int64_t> target_times; // frame timestamp of each y
    IndexRange train, val, test;

    std::size_t size() const { return X.size(); }
};

inline WindowedDataset make_windows(const FeatureFrame& frame, std::size_t W,
                                    const std::string& target_column = "close") {
    if (frame.rows() < W + 1)
        throw SeriesTooShort("make_windows: need at least " + std::to_string(W + 1) + " rows, have " +
                             std::to_string(frame.rows()));
    const std::vector<double>& target = frame.column(target_column);
    WindowedDataset ds;
    ds.W = W;
    ds.F = frame.cols();
    const std::size_t n = frame.rows() - W;
    ds.X.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> window(W * ds.F);
        for (std::size_t t = 0; t < W; ++t)
            for (std::size_t c = 0; c < ds.F; ++c) window[t * ds.F + c] = frame.columns[c][i + t];
        ds.X.push_back(std::move(window));
        ds.y.push_back(target[i + W]);
        ds.target_rows.push_back(i + W);
        ds.target_times.push_back(frame.index[i + W]);
    }
    return ds;
}

enum class SplitOrder {
    train_val_test, // chronological: train, then validation, then test
    train_test_val
};

namespace detail {

/// Largest-remainder apportionment of n into three segments; ties go to
/// the later segment.
inline std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& fractions) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = fractions[static_cast<std::size_t>(i)] * static_cast<double>(n);
        counts[static_cast<std::size_t>(i)] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        frac[static_cast<std::size_t>(i)] = exact - std::floor(exact + 1e-9);
        assigned += counts[static_cast<std::size_t>(i)];
    }
    std::size_t remainder = n - assigned;
    while (remainder > 0) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (frac[static_cast<std::size_t>(i)] >= frac[static_cast<std::size_t>(best)]) best = i;
        ++counts[static_cast<std::size_t>(best)];
        frac[static_cast<std::size_t>(best)] = -1.0;
        --remainder;
    }
    return counts;
}

} // namespace detail

/// Assigns chronological split boundaries in place. Fractions are
/// (train, val, test) and must sum to 1.
inline void split(WindowedDataset& ds, const std::array<double, 3>& fractions,
                  SplitOrder order = SplitOrder::train_val_test) {
    if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
        throw Error("split: fractions must sum to 1");
    const auto counts = detail::apportion(ds.size(), fractions);
    if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0)
        throw EmptySplit("split: a segment would be empty (" + std::to_string(counts[0]) + "/" +
                         std::to_string(counts[1]) + "/" + std::to_string(counts[2]) + ")");
    ds.train = {0, counts[0]};
    if (order == SplitOrder::train_val_test) {
        ds.val = {counts[0], counts[0] + counts[1]};
        ds.test = {counts[0] + counts[1], counts[0] + counts[1] + counts[2]};
    } else {
        ds.test = {counts[0], counts[0] + counts[2]};
        ds.val = {counts[0] + counts[2], counts[0] + counts[2] + counts[1]};
    }
}

// Binary dataset layout: magic, W, F, N, six boundary indices, then
// target rows/times, y, and the X windows as raw little-endian doubles.
inline void save_dataset(const WindowedDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    const char magic[8] = {'F', 'F', 'W', 'D', '1', 0, 0, 0};
    out.write(magic, 8);
    auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put_u64(ds.W);
    put_u64(ds.F);
    put_u64(ds.size());
    put_u64(ds.train.begin);
    put_u64(ds.train.end);
    put_u64(ds.val.begin);
    put_u64(ds.val.end);
    put_u64(ds.test.begin);
    put_u64(ds.test.end);
    for (std::size_t r : ds.target_rows) put_u64(r);
    for (std::int64_t t : ds.target_times) out.write(reinterpret_cast<const char*>(&t), 8);
    out.write(reinterpret_cast<const char*>(ds.y.data()), static_cast<std::streamsize>(ds.y.size() * 8));
    for (const auto& w : ds.X)
        out.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(w.size() * 8));
}

inline WindowedDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 5) != "FFWD1") throw Error("bad dataset file: " + path);
    auto get_u64 = [&] {
        std::uint64_t v;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    WindowedDataset ds;
    ds.W = get_u64();
    ds.F = get_u64();
    const std::size_t n = get_u64();
    ds.train = {get_u64(), get_u64()};
    ds.val = {get_u64(), get_u64()};
    ds.test = {get_u64(), get_u64()};
    ds.target_rows.resize(n);
    for (auto& r : ds.target_rows) r = get_u64();
    ds.target_times.resize(n);
    for (auto& t : ds.target_times) in.read(reinterpret_cast<char*>(&t), 8);
    ds.y.resize(n);
    in.read(reinterpret_cast<char*>(ds.y.data()), static_cast<std::streamsize>(n * 8));
    ds.X.assign(n, std::vector<double>(ds.W * ds.F));
    for (auto& w : ds.X)
        in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * 8));
    if (!in) throw Error("truncated dataset file: " + path);
    return ds;
}

} // namespace finforecast
