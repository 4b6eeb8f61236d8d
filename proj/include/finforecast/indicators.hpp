#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "finforecast/errors.hpp"
#include "finforecast/market_data.hpp"

namespace finforecast {

/// One indicator column aligned to its input index. Values before
/// `warmup` are NaN; everything from `warmup` on is defined.
struct IndicatorSeries {
    std::string name;
    std::vector<double> values;
    std::size_t warmup = 0;

    std::size_t size() const { return values.size(); }
};

namespace detail {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

inline IndicatorSeries sma(std::span<const double> close, std::size_t period, std::string name = "SMA") {
    if (period < 1) throw Error("sma: period must be >= 1");
    if (close.size() < period)
        throw SeriesTooShort("sma: need " + std::to_string(period) + " points, have " + std::to_string(close.size()));
    IndicatorSeries out{std::move(name), std::vector<double>(close.size(), detail::kNaN), period - 1};
    double sum = 0.0;
    for (std::size_t i = 0; i < close.size(); ++i) {
        sum += close[i];
        if (i >= period) sum -= close[i - period];
        if (i + 1 >= period) out.values[i] = sum / static_cast<double>(period);
    }
    return out;
}

/// EMA_t = C_t * a + EMA_{t-1} * (1 - a) with a = k/(period+1), seeded
/// with the SMA of the first `period` values.
inline IndicatorSeries ema(std::span<const double> close, std::size_t period, double k = 2.0,
                           std::string name = "EMA") {
    if (period < 1) throw Error("ema: period must be >= 1");
    if (close.size() < period)
        throw SeriesTooShort("ema: need " + std::to_string(period) + " points, have " + std::to_string(close.size()));
    IndicatorSeries out{std::move(name), std::vector<double>(close.size(), detail::kNaN), period - 1};
    const double alpha = k / (static_cast<double>(period) + 1.0);
    double seed = 0.0;
    for (std::size_t i = 0; i < period; ++i) seed += close[i];
    seed /= static_cast<double>(period);
    out.values[period - 1] = seed;
    for (std::size_t i = period; i < close.size(); ++i)
        out.values[i] = close[i] * alpha + out.values[i - 1] * (1.0 - alpha);
    return out;
}

/// Double-smoothed moving average: SMA(SMA(C, period), period).
inline IndicatorSeries trima(std::span<const double> close, std::size_t period, std::string name = "TRIMA") {
    if (period < 1) throw Error("trima: period must be >= 1");
    if (close.size() < 2 * period - 1)
        throw SeriesTooShort("trima: need " + std::to_string(2 * period - 1) + " points, have " +
                             std::to_string(close.size()));
    const IndicatorSeries first = sma(close, period);
    const IndicatorSeries second =
        sma(std::span<const double>(first.values).subspan(first.warmup), period);
    IndicatorSeries out{std::move(name), std::vector<double>(close.size(), detail::kNaN), 2 * (period - 1)};
    for (std::size_t i = out.warmup; i < close.size(); ++i)
        out.values[i] = second.values[i - first.warmup];
    return out;
}

/// Kaufman adaptive moving average. ER_t is net change over the window
/// divided by total absolute movement (0 when the path is flat); the
/// smoothing constant squashes between the fast and slow EMA constants.
inline IndicatorSeries kama(std::span<const double> close, std::size_t period, std::size_t fast = 2,
                            std::size_t slow = 30, std::string name = "KAMA") {
    if (period < 1) throw Error("kama: period must be >= 1");
    if (close.size() < period + 1)
        throw SeriesTooShort("kama: need " + std::to_string(period + 1) + " points, have " +
                             std::to_string(close.size()));
    IndicatorSeries out{std::move(name), std::vector<double>(close.size(), detail::kNaN), period};
    const double fast_sc = 2.0 / (static_cast<double>(fast) + 1.0);
    const double slow_sc = 2.0 / (static_cast<double>(slow) + 1.0);
    out.values[period] = close[period];
    for (std::size_t t = period + 1; t < close.size(); ++t) {
        double volatility = 0.0;
        for (std::size_t j = t - period + 1; j <= t; ++j) volatility += std::abs(close[j] - close[j - 1]);
        const double er = volatility > 0.0 ? std::abs(close[t] - close[t - period]) / volatility : 0.0;
        const double sc = (er * (fast_sc - slow_sc) + slow_sc) * (er * (fast_sc - slow_sc) + slow_sc);
        out.values[t] = out.values[t - 1] + sc * (close[t] - out.values[t - 1]);
    }
    return out;
}

struct BollingerBands {
    IndicatorSeries lower, middle, upper;
};

/// middle = SMA(period); sigma is the population standard deviation over
/// the same window; lower/upper = middle -/+ dev * sigma.
inline BollingerBands bollinger(std::span<const double> close, std::size_t period = 20, double dev = 2.0) {
    if (close.size() < period)
        throw SeriesTooShort("bollinger: need " + std::to_string(period) + " points, have " +
                             std::to_string(close.size()));
    IndicatorSeries middle = sma(close, period, "middleband");
    BollingerBands bands;
    bands.lower = IndicatorSeries{"lowerband", std::vector<double>(close.size(), detail::kNaN), period - 1};
    bands.upper = IndicatorSeries{"upperband", std::vector<double>(close.size(), detail::kNaN), period - 1};
    for (std::size_t i = period - 1; i < close.size(); ++i) {
        const double mb = middle.values[i];
        double ss = 0.0;
        for (std::size_t j = i + 1 - period; j <= i; ++j) ss += (close[j] - mb) * (close[j] - mb);
        const double sigma = std::sqrt(ss / static_cast<double>(period));
        bands.lower.values[i] = mb - dev * sigma;
        bands.upper.values[i] = mb + dev * sigma;
    }
    bands.middle = std::move(middle);
    return bands;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw LengthMismatch("pearson: length mismatch");
    if (x.size() < 2) throw Error("pearson: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateVariance("pearson: constant series");
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

/// Aligned named columns over a shared time index. No NaNs: warm-up rows
/// are trimmed frame-wide before construction completes.
struct FeatureFrame {
    std::vector<std::int64_t> index;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns; // column-major, one vector per name

    std::size_t rows() const { return index.size(); }
    std::size_t cols() const { return names.size(); }

    const std::vector<double>& column(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return columns[i];
        throw ColumnMismatch("no such column: " + name);
    }
    bool has_column(const std::string& name) const {
        for (const auto& n : names)
            if (n == name) return true;
        return false;
    }
};

struct IndicatorParams {
    std::size_t sma_period = 5;
    std::size_t ema_period = 5;
    double ema_k = 2.0;
    std::size_t trima_period = 5;
    std::size_t kama_period = 10;
    std::size_t kama_fast = 2;
    std::size_t kama_slow = 30;
    std::size_t bollinger_period = 20;
    double bollinger_dev = 2.0;
};

/// OHLCV-only frame (no trimming needed).
inline FeatureFrame make_ohlcv_frame(const OhlcvSeries& series) {
    FeatureFrame frame;
    frame.names = {"open", "high", "low", "close", "volume"};
    frame.columns.resize(5);
    for (const Bar& b : series.bars) {
        frame.index.push_back(b.timestamp);
        frame.columns[0].push_back(b.open);
        frame.columns[1].push_back(b.high);
        frame.columns[2].push_back(b.low);
        frame.columns[3].push_back(b.close);
        frame.columns[4].push_back(static_cast<double>(b.volume));
    }
    return frame;
}

inline FeatureFrame make_close_frame(const OhlcvSeries& series) {
    FeatureFrame frame;
    frame.names = {"close"};
    frame.columns.resize(1);
    for (const Bar& b : series.bars) {
        frame.index.push_back(b.timestamp);
        frame.columns[0].push_back(b.close);
    }
    return frame;
}

/// The 12-column frame: OHLCV plus the seven retained indicators, with
/// the maximum warm-up prefix trimmed so every row is fully defined.
inline FeatureFrame make_indicator_frame(const OhlcvSeries& series, const IndicatorParams& p = {}) {
    FeatureFrame base = make_ohlcv_frame(series);
    const std::span<const double> close(base.column("close"));

    std::vector<IndicatorSeries> ind;
    ind.push_back(sma(close, p.sma_period, "SMA" + std::to_string(p.sma_period)));
    ind.push_back(ema(close, p.ema_period, p.ema_k, "EMA" + std::to_string(p.ema_period)));
    ind.push_back(trima(close, p.trima_period, "TRIMA" + std::to_string(p.trima_period)));
    ind.push_back(kama(close, p.kama_period, p.kama_fast, p.kama_slow, "KAMA" + std::to_string(p.kama_period)));
    BollingerBands bands = bollinger(close, p.bollinger_period, p.bollinger_dev);
    ind.push_back(std::move(bands.lower));
    ind.push_back(std::move(bands.middle));
    ind.push_back(std::move(bands.upper));

    std::size_t warmup = 0;
    for (const auto& s : ind) warmup = std::max(warmup, s.warmup);

    FeatureFrame frame;
    const std::size_t n = base.rows() - warmup;
    frame.index.assign(base.index.begin() + static_cast<std::ptrdiff_t>(warmup), base.index.end());
    for (std::size_t c = 0; c < base.cols(); ++c) {
        frame.names.push_back(base.names[c]);
        frame.columns.emplace_back(base.columns[c].begin() + static_cast<std::ptrdiff_t>(warmup),
                                   base.columns[c].end());
    }
    for (const auto& s : ind) {
        frame.names.push_back(s.name);
        frame.columns.emplace_back(s.values.begin() + static_cast<std::ptrdiff_t>(warmup), s.values.end());
    }
    (void)n;
    return frame;
}

struct SelectionEntry {
    std::string name;
    double avg_r = 0.0; // signed mean of per-frame r with the target
    bool kept = false;
    std::string reason;
};

struct SelectionReport {
    std::vector<SelectionEntry> entries;   // every candidate, descending |avg_r|
    std::vector<std::string> selected;     // kept columns, descending |avg_r|
};

/// Correlation-based feature selection. OHLCV columns are always
/// retained; the |r| > threshold bar applies to indicator columns only.
/// Columns with degenerate variance are excluded, not fatal.
inline SelectionReport select_features(const std::vector<FeatureFrame>& frames,
                                       double threshold = 0.99,
                                       const std::string& target_column = "close") {
    if (frames.empty()) throw Error("select_features: no frames");
    static const std::vector<std::string> ohlcv = {"open", "high", "low", "close", "volume"};
    auto is_ohlcv = [&](const std::string& n) {
        for (const auto& o : ohlcv)
            if (o == n) return true;
        return false;
    };

    SelectionReport report;
    for (const std::string& name : frames.front().names) {
        SelectionEntry entry;
        entry.name = name;
        bool degenerate = false;
        double sum_r = 0.0;
        for (const FeatureFrame& f : frames) {
            try {
                sum_r += pearson(f.column(name), f.column(target_column));
            } catch (const DegenerateVariance&) {
                if (name == target_column) {
                    sum_r += 1.0; // self-correlation of a constant target
                } else {
                    degenerate = true;
                    break;
                }
            }
        }
        if (degenerate) {
            entry.avg_r = 0.0;
            entry.kept = false;
            entry.reason = "degenerate variance";
        } else {
            entry.avg_r = sum_r / static_cast<double>(frames.size());
            if (name == target_column) {
                entry.kept = true;
                entry.reason = "target";
            } else if (is_ohlcv(name)) {
                entry.kept = true;
                entry.reason = "ohlcv (unconditional)";
            } else if (std::abs(entry.avg_r) > threshold) {
                entry.kept = true;
                entry.reason = "|r| > threshold";
            } else {
                entry.kept = false;
                entry.reason = "|r| <= threshold";
            }
        }
        report.entries.push_back(std::move(entry));
    }

    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const SelectionEntry& a, const SelectionEntry& b) {
                         return std::abs(a.avg_r) > std::abs(b.avg_r);
                     });
    for (const auto& e : report.entries)
        if (e.kept) report.selected.push_back(e.name);
    return report;
}

inline void write_selection_report(const SelectionReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "column,avg_r,status,reason\n";
    char buf[160];
    for (const auto& e : report.entries) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%s,%s\n", e.name.c_str(), e.avg_r,
                      e.kept ? "keep" : "drop", e.reason.c_str());
        out << buf;
    }
}

inline void export_frame_csv(const FeatureFrame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "timestamp";
    for (const auto& n : frame.names) out << ',' << n;
    out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out << format_timestamp(frame.index[r]);
        for (std::size_t c = 0; c < frame.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), ",%.17g", frame.columns[c][r]);
            out << buf;
        }
        out << '\n';
    }
}

inline FeatureFrame import_frame_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("empty frame file: " + path);
    auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "timestamp") throw MissingColumn("timestamp");
    FeatureFrame frame;
    frame.names.assign(header.begin() + 1, header.end());
    frame.columns.resize(frame.names.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) throw UnparseableRow(lineno, "field count mismatch");
        std::int64_t ts;
        if (!parse_timestamp(fields[0], ts)) throw UnparseableRow(lineno, "bad timestamp");
        frame.index.push_back(ts);
        for (std::size_t c = 0; c < frame.names.size(); ++c) {
            double v;
            if (!detail::parse_double(fields[c + 1], v)) throw UnparseableRow(lineno, "bad numeric field");
            frame.columns[c].push_back(v);
        }
    }
    return frame;
}

} // namespace finforecast
