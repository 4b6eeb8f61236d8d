#pragma once

#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "finforecast/errors.hpp"

namespace finforecast {

struct MetricsReport {
    double r2 = 0.0;
    double mae_value = 0.0;
    double rmse_value = 0.0;
    double mape_percent = 0.0;
    std::size_t n = 0;
};

inline double r2_score(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw LengthMismatch("r2_score: length mismatch");
    if (actual.size() < 2) throw Error("r2_score: need at least 2 points");
    double mean = 0.0;
    for (double a : actual) mean += a;
    mean /= static_cast<double>(actual.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    if (ss_tot == 0.0) throw DegenerateVariance("r2_score: actual series is constant");
    return 1.0 - ss_res / ss_tot;
}

inline double mae(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw LengthMismatch("mae: length mismatch");
    if (actual.empty()) throw EmptyInput("mae: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) sum += std::abs(actual[i] - predicted[i]);
    return sum / static_cast<double>(actual.size());
}

inline double rmse(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw LengthMismatch("rmse: length mismatch");
    if (actual.empty()) throw EmptyInput("rmse: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i)
        sum += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

/// Percentage error; undefined (throws) when any actual value is zero.
inline double mape(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw LengthMismatch("mape: length mismatch");
    if (actual.empty()) throw EmptyInput("mape: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i] == 0.0) throw ZeroActual("mape: actual value is zero at index " + std::to_string(i));
        sum += std::abs((actual[i] - predicted[i]) / actual[i]);
    }
    return sum / static_cast<double>(actual.size()) * 100.0;
}

inline MetricsReport compute_metrics(std::span<const double> actual, std::span<const double> predicted) {
    MetricsReport report;
    report.r2 = r2_score(actual, predicted);
    report.mae_value = mae(actual, predicted);
    report.rmse_value = rmse(actual, predicted);
    report.mape_percent = mape(actual, predicted);
    report.n = actual.size();
    return report;
}

struct BacktestReport {
    double directional_accuracy = 0.0;
    double cumulative_return = 0.0;
    std::size_t trade_count = 0; // flat-to-long entries
};

namespace detail {
inline int sign_of(double x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }
}

/// Long/flat rule on price-unit series: hold over (t, t+1] iff the
/// prediction for t+1 exceeds the actual at t. Directional accuracy
/// compares the sign of the predicted move with the realized move;
/// zero-change steps count as correct only when both sides are zero.
inline BacktestReport backtest(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw LengthMismatch("backtest: length mismatch");
    if (actual.size() < 2) throw Error("backtest: need at least 2 points");

    BacktestReport report;
    std::size_t correct = 0;
    double equity = 1.0;
    bool held = false;
    for (std::size_t t = 0; t + 1 < actual.size(); ++t) {
        const bool go_long = predicted[t + 1] > actual[t];
        if (go_long) {
            equity *= actual[t + 1] / actual[t];
            if (!held) ++report.trade_count;
        }
        held = go_long;
        if (detail::sign_of(predicted[t + 1] - actual[t]) == detail::sign_of(actual[t + 1] - actual[t]))
            ++correct;
    }
    report.directional_accuracy = static_cast<double>(correct) / static_cast<double>(actual.size() - 1);
    report.cumulative_return = equity - 1.0;
    return report;
}

} // namespace finforecast
