// Command-line driver for the forecasting pipeline. Subcommands operate
// on persisted intermediates so each stage can be rerun independently.
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 training divergence.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "finforecast/runner.hpp"

namespace ff = finforecast;

namespace {

ff::ExperimentConfig make_config(const std::string& config_path, const std::string& variant,
                                 const std::string& input, const std::string& out_dir,
                                 std::uint64_t seed, bool seed_set) {
    ff::ExperimentConfig config;
    if (!config_path.empty()) config = ff::load_config(config_path);
    if (!input.empty()) config.input_csv = input;
    if (!variant.empty()) ff::apply_variant(config, variant);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (seed_set) config.train.seed = seed;
    if (config.input_csv.empty()) throw ff::ConfigError("no input CSV (use --config or --input)");
    return config;
}

int run_ingest(const ff::ExperimentConfig& config) {
    ff::OhlcvSeries series = ff::parse_csv(config.input_csv, config.schema);
    const std::int64_t target = config.resample_minutes * 60;
    if (target > 0 && target != series.interval_seconds) series = ff::resample(series, target);
    std::filesystem::create_directories(config.out_dir);
    const std::string out = config.out_dir + "/resampled.csv";
    ff::export_csv(series, out);
    std::cerr << "ingest: " << series.size() << " bars -> " << out << "\n";
    return 0;
}

int run_features(const ff::ExperimentConfig& config) {
    ff::OhlcvSeries series = ff::parse_csv(config.input_csv, config.schema);
    const std::int64_t target = config.resample_minutes * 60;
    if (target > 0 && target != series.interval_seconds) series = ff::resample(series, target);
    ff::FeatureFrame frame = ff::make_indicator_frame(series, config.indicators);
    ff::SelectionReport report = ff::select_features({frame}, config.selection_threshold);
    std::filesystem::create_directories(config.out_dir);
    ff::export_frame_csv(frame, config.out_dir + "/features.csv");
    ff::write_selection_report(report, config.out_dir + "/selection.csv");
    std::cerr << "features: " << frame.rows() << " rows, " << report.selected.size()
              << " columns kept -> " << config.out_dir << "/features.csv\n";
    return 0;
}

int run_train(const ff::ExperimentConfig& config) {
    ff::RunArtifacts artifacts = ff::run_experiment(config);
    for (std::size_t e = 0; e < artifacts.history.train_loss.size(); ++e)
        std::fprintf(stderr, "epoch %zu: train_loss=%.6g val_loss=%.6g\n", e + 1,
                     artifacts.history.train_loss[e], artifacts.history.val_loss[e]);
    std::cerr << "train: best epoch " << artifacts.history.best_epoch + 1
              << (artifacts.history.stopped_early ? " (early stop)" : "") << ", test R2 "
              << artifacts.metrics.r2 << "\n";
    std::cerr << "artifacts: " << artifacts.checkpoint_path << ", " << artifacts.metrics_path << "\n";
    return 0;
}

int run_evaluate(const ff::ExperimentConfig& config, const std::string& checkpoint) {
    ff::PreparedData prep = ff::prepare_data(config);
    ff::ModelParams params = ff::load_checkpoint(checkpoint);
    if (params.spec.features != prep.dataset.F)
        throw ff::ShapeMismatch("checkpoint features do not match the configured approach");
    const std::vector<double> preds = ff::predict_range(params, prep.dataset, prep.dataset.test);
    const std::span<const double> actual(prep.dataset.y.data() + prep.dataset.test.begin,
                                         prep.dataset.test.count());
    ff::MetricsReport m = ff::compute_metrics(actual, preds);
    const auto actual_price = ff::inverse_transform(actual, prep.scaler, "close");
    const auto pred_price = ff::inverse_transform(preds, prep.scaler, "close");
    std::filesystem::create_directories(config.out_dir);
    ff::write_metrics_csv(config.out_dir + "/" + config.variant() + "_metrics.csv", config.variant(), m,
                          ff::mae(actual_price, pred_price), ff::rmse(actual_price, pred_price),
                          ff::backtest(actual_price, pred_price));
    std::printf("n=%zu r2=%.6f mae=%.6g rmse=%.6g mape=%.4f%%\n", m.n, m.r2, m.mae_value, m.rmse_value,
                m.mape_percent);
    return 0;
}

int run_backtest(const std::string& trace_path) {
    std::ifstream in(trace_path);
    if (!in) throw ff::Error("cannot open trace file: " + trace_path);
    std::string line;
    std::getline(in, line); // header
    std::vector<double> actual, predicted;
    while (std::getline(in, line)) {
        const auto fields = ff::detail::split_csv_line(line);
        if (fields.size() != 3) continue;
        double a, p;
        if (ff::detail::parse_double(fields[1], a) && ff::detail::parse_double(fields[2], p)) {
            actual.push_back(a);
            predicted.push_back(p);
        }
    }
    ff::BacktestReport report = ff::backtest(actual, predicted);
    std::printf("steps=%zu directional_accuracy=%.4f cumulative_return=%.4f trades=%zu\n",
                actual.size() - 1, report.directional_accuracy, report.cumulative_return,
                report.trade_count);
    return 0;
}

int run_matrix_cmd(const ff::ExperimentConfig& base, const std::vector<std::string>& variants) {
    std::vector<ff::ExperimentConfig> configs;
    std::vector<std::string> names = variants;
    if (names.empty())
        names = {"univariatexuni", "univariatexbi", "ohlcvxuni", "ohlcvxbi", "indicatorsxuni",
                 "indicatorsxbi"};
    for (const auto& v : names) {
        ff::ExperimentConfig c = base;
        ff::apply_variant(c, v);
        configs.push_back(c);
    }
    ff::MatrixResult result = ff::run_matrix(configs);
    std::filesystem::create_directories(base.out_dir);
    std::ofstream(base.out_dir + "/matrix.txt") << result.table;
    std::cout << result.table;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equity price forecasting pipeline (LSTM / bi-LSTM)"};
    app.require_subcommand(1);

    std::string config_path, variant, input, out_dir, checkpoint, trace_path;
    std::uint64_t seed = 0;
    std::vector<std::string> variants;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file (JSON)");
        cmd->add_option("--input", input, "input OHLCV CSV (overrides config)");
        cmd->add_option("--variant", variant,
                        "model variant: {univariate|ohlcv|indicators}x{uni|bi}");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "training seed (overrides config)");
    };

    CLI::App* ingest = app.add_subcommand("ingest", "parse + resample a CSV, export hourly bars");
    add_common(ingest);
    CLI::App* features = app.add_subcommand("features", "compute indicators + selection report");
    add_common(features);
    CLI::App* train = app.add_subcommand("train", "run the full pipeline and train one variant");
    add_common(train);
    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a saved checkpoint on the test split");
    add_common(evaluate);
    evaluate->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    CLI::App* backtest = app.add_subcommand("backtest", "long/flat backtest of a prediction trace");
    backtest->add_option("--trace", trace_path, "prediction trace CSV")->required();
    CLI::App* matrix = app.add_subcommand("matrix", "run all (or selected) variants and rank them");
    add_common(matrix);
    matrix->add_option("--variants", variants, "subset of variants to run");

    CLI11_PARSE(app, argc, argv);
    const bool seed_set = app.get_subcommand()->count("--seed") > 0;

    try {
        if (backtest->parsed()) return run_backtest(trace_path);
        ff::ExperimentConfig config = make_config(config_path, variant, input, out_dir, seed, seed_set);
        if (ingest->parsed()) return run_ingest(config);
        if (features->parsed()) return run_features(config);
        if (train->parsed()) return run_train(config);
        if (evaluate->parsed()) return run_evaluate(config, checkpoint);
        if (matrix->parsed()) return run_matrix_cmd(config, variants);
    } catch (const ff::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ff::DivergenceDetected& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 3;
    } catch (const ff::Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
