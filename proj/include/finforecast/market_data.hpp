#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "finforecast/errors.hpp"

namespace finforecast {

/// One OHLCV bar. Timestamps are exchange-local civil time stored as
/// seconds since the epoch (no timezone conversion is ever applied).
struct Bar {
    std::int64_t timestamp = 0;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    std::int64_t volume = 0;

    bool valid() const {
        return low <= open && open <= high && low <= close && close <= high &&
               low <= high && volume >= 0;
    }
};

struct OhlcvSeries {
    std::vector<Bar> bars;
    std::int64_t interval_seconds = 0;

    std::size_t size() const { return bars.size(); }
    bool empty() const { return bars.empty(); }
};

namespace detail {

// Howard Hinnant's civil-date algorithms.
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(d) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc{} && p == e;
}

} // namespace detail

/// Parses "YYYY-MM-DD HH:MM[:SS]" or the 'T'-separated ISO form into
/// epoch seconds. Returns false on malformed input.
inline bool parse_timestamp(const std::string& s, std::int64_t& out) {
    int y, mo, d, h, mi, sec = 0;
    const int n = std::sscanf(s.c_str(), "%d-%d-%d%*1[T ]%d:%d:%d", &y, &mo, &d, &h, &mi, &sec);
    if (n < 5) return false;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 60)
        return false;
    out = detail::days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
    return true;
}

inline std::string format_timestamp(std::int64_t ts) {
    std::int64_t days = ts / 86400;
    std::int64_t rem = ts % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    int y, m, d;
    detail::civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", y, m, d,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

/// Maps a vendor's header names onto the six required fields.
struct CsvSchema {
    std::string timestamp = "timestamp";
    std::string open = "open";
    std::string high = "high";
    std::string low = "low";
    std::string close = "close";
    std::string volume = "volume";
};

/// Reads an OHLCV CSV (UTF-8, header row, ISO-8601 timestamps). Aborts on
/// the first malformed or invariant-violating row. The series interval is
/// inferred as the smallest gap between consecutive timestamps.
inline OhlcvSeries parse_csv(const std::string& path, const CsvSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) return {}; // empty file, zero bars

    const auto header = detail::split_csv_line(line);
    auto find_col = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw MissingColumn(name);
    };
    const std::size_t c_ts = find_col(schema.timestamp);
    const std::size_t c_o = find_col(schema.open);
    const std::size_t c_h = find_col(schema.high);
    const std::size_t c_l = find_col(schema.low);
    const std::size_t c_c = find_col(schema.close);
    const std::size_t c_v = find_col(schema.volume);

    OhlcvSeries series;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        const std::size_t need = std::max({c_ts, c_o, c_h, c_l, c_c, c_v}) + 1;
        if (fields.size() < need) throw UnparseableRow(lineno, "expected " + std::to_string(need) + " fields");

        Bar bar;
        if (!parse_timestamp(fields[c_ts], bar.timestamp))
            throw UnparseableRow(lineno, "bad timestamp '" + fields[c_ts] + "'");
        double vol;
        if (!detail::parse_double(fields[c_o], bar.open) || !detail::parse_double(fields[c_h], bar.high) ||
            !detail::parse_double(fields[c_l], bar.low) || !detail::parse_double(fields[c_c], bar.close) ||
            !detail::parse_double(fields[c_v], vol))
            throw UnparseableRow(lineno, "bad numeric field");
        bar.volume = static_cast<std::int64_t>(vol);

        if (bar.volume < 0) throw InvariantViolation(lineno, "volume >= 0");
        if (!(bar.low <= bar.high)) throw InvariantViolation(lineno, "low <= high");
        if (!(bar.low <= bar.open && bar.open <= bar.high))
            throw InvariantViolation(lineno, "low <= open <= high");
        if (!(bar.low <= bar.close && bar.close <= bar.high))
            throw InvariantViolation(lineno, "low <= close <= high");
        if (!series.bars.empty() && bar.timestamp <= series.bars.back().timestamp)
            throw InvariantViolation(lineno, "timestamps strictly increasing");
        series.bars.push_back(bar);
    }

    if (series.bars.size() >= 2) {
        std::int64_t min_gap = series.bars[1].timestamp - series.bars[0].timestamp;
        for (std::size_t i = 2; i < series.bars.size(); ++i)
            min_gap = std::min(min_gap, series.bars[i].timestamp - series.bars[i - 1].timestamp);
        series.interval_seconds = min_gap;
    }
    return series;
}

inline void export_csv(const OhlcvSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "timestamp,open,high,low,close,volume\n";
    char buf[160];
    for (const Bar& b : series.bars) {
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g,%lld\n",
                      format_timestamp(b.timestamp).c_str(), b.open, b.high, b.low, b.close,
                      static_cast<long long>(b.volume));
        out << buf;
    }
}

/// Aggregates bars into wall-clock-aligned buckets of `target_seconds`.
/// Buckets with no source bars are dropped; partial buckets keep whatever
/// bars fall inside them.
inline OhlcvSeries resample(const OhlcvSeries& series, std::int64_t target_seconds) {
    if (series.interval_seconds > 0 &&
        (target_seconds <= 0 || target_seconds % series.interval_seconds != 0))
        throw IncompatibleInterval("target " + std::to_string(target_seconds) +
                                   "s is not a multiple of source interval " +
                                   std::to_string(series.interval_seconds) + "s");
    if (target_seconds == series.interval_seconds) return series;

    OhlcvSeries out;
    out.interval_seconds = target_seconds;
    std::int64_t bucket_start = 0;
    bool open_bucket = false;
    Bar agg;
    for (const Bar& b : series.bars) {
        const std::int64_t bs = b.timestamp / target_seconds * target_seconds -
                                (b.timestamp < 0 && b.timestamp % target_seconds != 0 ? target_seconds : 0);
        if (!open_bucket || bs != bucket_start) {
            if (open_bucket) out.bars.push_back(agg);
            bucket_start = bs;
            open_bucket = true;
            agg = b;
            agg.timestamp = bs;
        } else {
            agg.high = std::max(agg.high, b.high);
            agg.low = std::min(agg.low, b.low);
            agg.close = b.close;
            agg.volume += b.volume;
        }
    }
    if (open_bucket) out.bars.push_back(agg);
    return out;
}

} // namespace finforecast
