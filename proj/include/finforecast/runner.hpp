#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "finforecast/errors.hpp"
#include "finforecast/evaluation.hpp"
#include "finforecast/indicators.hpp"
#include "finforecast/market_data.hpp"
#include "finforecast/neural_core.hpp"
#include "finforecast/pipeline.hpp"
#include "finforecast/training.hpp"

namespace finforecast {

enum class Approach { univariate, ohlcv, indicators };

inline std::string to_string(Approach a) {
    switch (a) {
        case Approach::univariate: return "univariate";
        case Approach::ohlcv: return "ohlcv";
        default: return "indicators";
    }
}

inline Approach approach_from_string(const std::string& s) {
    if (s == "univariate") return Approach::univariate;
    if (s == "ohlcv") return Approach::ohlcv;
    if (s == "indicators") return Approach::indicators;
    throw ConfigError("unknown approach: " + s);
}

/// Feature count each approach implies: close only, raw OHLCV, or OHLCV
/// plus the seven retained indicators.
inline std::size_t feature_count(Approach a) {
    switch (a) {
        case Approach::univariate: return 1;
        case Approach::ohlcv: return 5;
        default: return 12;
    }
}

struct ExperimentConfig {
    std::string input_csv;
    CsvSchema schema;
    std::int64_t resample_minutes = 60; // 0 disables resampling
    Approach approach = Approach::indicators;
    Direction direction = Direction::bidirectional;
    std::size_t window = 24;
    std::array<double, 3> split_fractions{0.70, 0.15, 0.15};
    SplitOrder split_order = SplitOrder::train_val_test;
    bool scaler_fit_full = false; // default: fit on the training range only
    double selection_threshold = 0.99;
    TrainConfig train;
    IndicatorParams indicators;
    std::string out_dir = "out";

    std::string variant() const {
        return to_string(approach) + "x" +
               (direction == Direction::bidirectional ? "bi" : "uni");
    }
};

inline void apply_variant(ExperimentConfig& config, const std::string& variant) {
    const auto x = variant.find('x');
    if (x == std::string::npos) throw ConfigError("variant must look like indicatorsxbi: " + variant);
    config.approach = approach_from_string(variant.substr(0, x));
    const std::string dir = variant.substr(x + 1);
    if (dir == "uni")
        config.direction = Direction::unidirectional;
    else if (dir == "bi")
        config.direction = Direction::bidirectional;
    else
        throw ConfigError("unknown direction: " + dir);
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["input_csv"] = c.input_csv;
    j["schema"] = {{"timestamp", c.schema.timestamp}, {"open", c.schema.open},
                   {"high", c.schema.high},           {"low", c.schema.low},
                   {"close", c.schema.close},         {"volume", c.schema.volume}};
    j["resample_minutes"] = c.resample_minutes;
    j["approach"] = to_string(c.approach);
    j["direction"] = c.direction == Direction::bidirectional ? "bi" : "uni";
    j["window"] = c.window;
    j["split"] = c.split_fractions;
    j["split_order"] = c.split_order == SplitOrder::train_val_test ? "train_val_test" : "train_test_val";
    j["scaler_fit"] = c.scaler_fit_full ? "full" : "train";
    j["threshold"] = c.selection_threshold;
    j["train"] = {{"epochs", c.train.epochs},         {"learning_rate", c.train.learning_rate},
                  {"patience", c.train.patience},     {"batch_size", c.train.batch_size},
                  {"seed", c.train.seed},             {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},           {"epsilon", c.train.epsilon},
                  {"shuffle", c.train.shuffle},       {"clip_norm", c.train.clip_norm},
                  {"hidden", c.train.hidden}};
    j["indicators"] = {{"sma_period", c.indicators.sma_period},
                       {"ema_period", c.indicators.ema_period},
                       {"ema_k", c.indicators.ema_k},
                       {"trima_period", c.indicators.trima_period},
                       {"kama_period", c.indicators.kama_period},
                       {"kama_fast", c.indicators.kama_fast},
                       {"kama_slow", c.indicators.kama_slow},
                       {"bollinger_period", c.indicators.bollinger_period},
                       {"bollinger_dev", c.indicators.bollinger_dev}};
    j["out_dir"] = c.out_dir;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        c.input_csv = j.value("input_csv", c.input_csv);
        if (j.contains("schema")) {
            const auto& s = j.at("schema");
            c.schema.timestamp = s.value("timestamp", c.schema.timestamp);
            c.schema.open = s.value("open", c.schema.open);
            c.schema.high = s.value("high", c.schema.high);
            c.schema.low = s.value("low", c.schema.low);
            c.schema.close = s.value("close", c.schema.close);
            c.schema.volume = s.value("volume", c.schema.volume);
        }
        c.resample_minutes = j.value("resample_minutes", c.resample_minutes);
        if (j.contains("approach")) c.approach = approach_from_string(j.at("approach"));
        if (j.contains("direction")) {
            const std::string d = j.at("direction");
            if (d != "uni" && d != "bi") throw ConfigError("unknown direction: " + d);
            c.direction = d == "bi" ? Direction::bidirectional : Direction::unidirectional;
        }
        c.window = j.value("window", c.window);
        if (j.contains("split")) {
            const auto& s = j.at("split");
            if (!s.is_array() || s.size() != 3) throw ConfigError("split must be [train, val, test]");
            for (std::size_t i = 0; i < 3; ++i) c.split_fractions[i] = s[i];
        }
        if (j.contains("split_order")) {
            const std::string o = j.at("split_order");
            if (o == "train_val_test")
                c.split_order = SplitOrder::train_val_test;
            else if (o == "train_test_val")
                c.split_order = SplitOrder::train_test_val;
            else
                throw ConfigError("unknown split_order: " + o);
        }
        if (j.contains("scaler_fit")) {
            const std::string f = j.at("scaler_fit");
            if (f != "train" && f != "full") throw ConfigError("scaler_fit must be train or full");
            c.scaler_fit_full = f == "full";
        }
        c.selection_threshold = j.value("threshold", c.selection_threshold);
        if (j.contains("train")) {
            const auto& t = j.at("train");
            c.train.epochs = t.value("epochs", c.train.epochs);
            c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
            c.train.patience = t.value("patience", c.train.patience);
            c.train.batch_size = t.value("batch_size", c.train.batch_size);
            c.train.seed = t.value("seed", c.train.seed);
            c.train.beta1 = t.value("beta1", c.train.beta1);
            c.train.beta2 = t.value("beta2", c.train.beta2);
            c.train.epsilon = t.value("epsilon", c.train.epsilon);
            c.train.shuffle = t.value("shuffle", c.train.shuffle);
            c.train.clip_norm = t.value("clip_norm", c.train.clip_norm);
            c.train.hidden = t.value("hidden", c.train.hidden);
        }
        if (j.contains("indicators")) {
            const auto& p = j.at("indicators");
            c.indicators.sma_period = p.value("sma_period", c.indicators.sma_period);
            c.indicators.ema_period = p.value("ema_period", c.indicators.ema_period);
            c.indicators.ema_k = p.value("ema_k", c.indicators.ema_k);
            c.indicators.trima_period = p.value("trima_period", c.indicators.trima_period);
            c.indicators.kama_period = p.value("kama_period", c.indicators.kama_period);
            c.indicators.kama_fast = p.value("kama_fast", c.indicators.kama_fast);
            c.indicators.kama_slow = p.value("kama_slow", c.indicators.kama_slow);
            c.indicators.bollinger_period = p.value("bollinger_period", c.indicators.bollinger_period);
            c.indicators.bollinger_dev = p.value("bollinger_dev", c.indicators.bollinger_dev);
        }
        c.out_dir = j.value("out_dir", c.out_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    c.train.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    return config_from_json(j);
}

/// Canonical serialized form: sorted keys, all defaults filled in.
inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2); }

struct RunArtifacts {
    std::string checkpoint_path;
    std::string history_path;
    std::string metrics_path;
    std::string trace_path;
    MetricsReport metrics;        // normalized units
    double mae_price = 0.0;       // price units, for interpretability
    double rmse_price = 0.0;
    BacktestReport backtest_report;
    TrainHistory history;
};

namespace detail {

inline FeatureFrame build_frame(const OhlcvSeries& series, const ExperimentConfig& config) {
    switch (config.approach) {
        case Approach::univariate: return make_close_frame(series);
        case Approach::ohlcv: return make_ohlcv_frame(series);
        default: return make_indicator_frame(series, config.indicators);
    }
}

inline OhlcvSeries load_series(const ExperimentConfig& config) {
    OhlcvSeries series = parse_csv(config.input_csv, config.schema);
    const std::int64_t target = config.resample_minutes * 60;
    if (target > 0 && target != series.interval_seconds) series = resample(series, target);
    return series;
}

} // namespace detail

/// Everything before training: frame, scaler, windows, split. Shared by
/// run_experiment and the standalone evaluate/backtest subcommands.
struct PreparedData {
    FeatureFrame frame;  // raw (unnormalized)
    Scaler scaler;
    WindowedDataset dataset;
};

inline PreparedData prepare_data(const ExperimentConfig& config) {
    PreparedData prep;
    prep.frame = detail::build_frame(detail::load_series(config), config);
    if (prep.frame.rows() < config.window + 1)
        throw SeriesTooShort("not enough rows after preprocessing: " + std::to_string(prep.frame.rows()));
    const std::size_t n_windows = prep.frame.rows() - config.window;
    const std::size_t n_train = detail::apportion(n_windows, config.split_fractions)[0];
    const std::size_t fit_end = config.scaler_fit_full ? prep.frame.rows() : n_train + config.window;
    prep.scaler = fit_scaler(prep.frame, 0, fit_end);
    prep.dataset = make_windows(transform(prep.frame, prep.scaler), config.window);
    split(prep.dataset, config.split_fractions, config.split_order);
    return prep;
}

inline std::vector<double> predict_range(const ModelParams& params, const WindowedDataset& ds,
                                         IndexRange range) {
    std::vector<double> preds;
    preds.reserve(range.count());
    for (std::size_t i = range.begin; i < range.end; ++i) preds.push_back(predict(ds.X[i], params));
    return preds;
}

inline void write_metrics_csv(const std::string& path, const std::string& variant,
                              const MetricsReport& m, double mae_price, double rmse_price,
                              const BacktestReport& bt) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "variant,n,r2,mae,rmse,mape_percent,mae_price,rmse_price,"
           "directional_accuracy,cumulative_return,trade_count\n";
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%zu\n",
                  variant.c_str(), m.n, m.r2, m.mae_value, m.rmse_value, m.mape_percent, mae_price,
                  rmse_price, bt.directional_accuracy, bt.cumulative_return, bt.trade_count);
    out << buf;
}

/// Writes the (timestamp, actual_price, predicted_price) trace for the
/// test segment. Chart rendering is deliberately left to external tools
/// reading this CSV; the export itself is the contract.
inline void emit_plot_trace(const std::string& path, std::span<const std::int64_t> times,
                            std::span<const double> actual_price, std::span<const double> predicted_price) {
    if (times.size() != actual_price.size() || times.size() != predicted_price.size())
        throw LengthMismatch("emit_plot_trace: length mismatch");
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "timestamp,actual,predicted\n";
    char buf[128];
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s,%.12g,%.12g\n", format_timestamp(times[i]).c_str(),
                      actual_price[i], predicted_price[i]);
        out << buf;
    }
}

/// Full pipeline for one configuration: ingest, features, windows,
/// train, evaluate, artifacts. Deterministic under config.train.seed.
inline RunArtifacts run_experiment(const ExperimentConfig& config) {
    PreparedData prep = prepare_data(config);
    const WindowedDataset& ds = prep.dataset;

    ModelSpec spec{config.direction, config.train.hidden, ds.F};
    TrainResult trained = train(spec, ds, config.train);

    const std::vector<double> preds = predict_range(trained.params, ds, ds.test);
    const std::span<const double> actual(ds.y.data() + ds.test.begin, ds.test.count());

    RunArtifacts artifacts;
    artifacts.history = trained.history;
    artifacts.metrics = compute_metrics(actual, preds);

    const std::vector<double> actual_price = inverse_transform(actual, prep.scaler, "close");
    const std::vector<double> pred_price = inverse_transform(preds, prep.scaler, "close");
    artifacts.mae_price = mae(actual_price, pred_price);
    artifacts.rmse_price = rmse(actual_price, pred_price);
    artifacts.backtest_report = backtest(actual_price, pred_price);

    std::filesystem::create_directories(config.out_dir);
    const std::string base = config.out_dir + "/" + config.variant();
    artifacts.checkpoint_path = base + ".ckpt";
    artifacts.history_path = base + "_history.csv";
    artifacts.metrics_path = base + "_metrics.csv";
    artifacts.trace_path = base + "_trace.csv";

    save_checkpoint(trained.params, artifacts.checkpoint_path);
    export_history_csv(trained.history, artifacts.history_path);
    write_metrics_csv(artifacts.metrics_path, config.variant(), artifacts.metrics, artifacts.mae_price,
                      artifacts.rmse_price, artifacts.backtest_report);
    emit_plot_trace(artifacts.trace_path,
                    std::span<const std::int64_t>(ds.target_times.data() + ds.test.begin, ds.test.count()),
                    actual_price, pred_price);
    return artifacts;
}

struct MatrixRow {
    std::string variant;
    MetricsReport metrics;
};

struct MatrixResult {
    std::vector<MatrixRow> rows; // sorted by descending R^2
    std::string table;           // formatted text table, best values flagged
};

/// Runs every configuration and ranks the variants by test R^2. All
/// configs must share the same input and split.
inline MatrixResult run_matrix(const std::vector<ExperimentConfig>& configs) {
    if (configs.empty()) throw ConfigError("run_matrix: no configs");
    for (const auto& c : configs)
        if (c.input_csv != configs.front().input_csv ||
            c.split_fractions != configs.front().split_fractions ||
            c.window != configs.front().window)
            throw InconsistentDataset("run_matrix: configs differ in input, window, or split");

    MatrixResult result;
    for (const auto& c : configs) {
        RunArtifacts art = run_experiment(c);
        result.rows.push_back({c.variant(), art.metrics});
    }
    std::stable_sort(result.rows.begin(), result.rows.end(),
                     [](const MatrixRow& a, const MatrixRow& b) { return a.metrics.r2 > b.metrics.r2; });

    double best_r2 = result.rows.front().metrics.r2;
    double best_mae = result.rows.front().metrics.mae_value;
    double best_rmse = result.rows.front().metrics.rmse_value;
    double best_mape = result.rows.front().metrics.mape_percent;
    for (const auto& r : result.rows) {
        best_mae = std::min(best_mae, r.metrics.mae_value);
        best_rmse = std::min(best_rmse, r.metrics.rmse_value);
        best_mape = std::min(best_mape, r.metrics.mape_percent);
    }

    char buf[256];
    std::string table = "variant              R2          MAE         RMSE        MAPE%\n";
    for (const auto& r : result.rows) {
        std::snprintf(buf, sizeof(buf), "%-20s %.6f%s  %.6f%s  %.6f%s  %.4f%s\n", r.variant.c_str(),
                      r.metrics.r2, r.metrics.r2 == best_r2 ? "*" : " ", r.metrics.mae_value,
                      r.metrics.mae_value == best_mae ? "*" : " ", r.metrics.rmse_value,
                      r.metrics.rmse_value == best_rmse ? "*" : " ", r.metrics.mape_percent,
                      r.metrics.mape_percent == best_mape ? "*" : " ");
        table += buf;
    }
    result.table = table;
    return result;
}

} // namespace finforecast
