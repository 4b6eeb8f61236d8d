#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "finforecast/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace finforecast;

namespace {

FeatureFrame toy_frame(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FeatureFrame f;
    for (std::size_t c = 0; c < cols; ++c) {
        f.names.push_back(c == 0 ? "close" : "col" + std::to_string(c));
        std::vector<double> col(rows);
        for (double& v : col) v = ffsupport::gaussian(rng) * 10.0 + 50.0;
        f.columns.push_back(std::move(col));
    }
    f.index.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) f.index[r] = static_cast<std::int64_t>(r) * 3600;
    return f;
}

} // namespace

TEST_CASE("fit_scaler records per-column min/max over the fit range") {
    FeatureFrame f;
    f.names = {"a", "b"};
    f.columns = {{2, 4, 6}, {-1, 0, 5}};
    f.index = {0, 3600, 7200};
    const Scaler s = fit_scaler(f, 0, 3);
    CHECK(s.mins[0] == 2.0);
    CHECK(s.maxs[0] == 6.0);
    CHECK(s.mins[1] == -1.0);
    CHECK(s.maxs[1] == 5.0);

    const Scaler partial = fit_scaler(f, 0, 2);
    CHECK(partial.maxs[0] == 4.0);
}

TEST_CASE("fit_scaler rejects constant columns") {
    FeatureFrame f;
    f.names = {"a"};
    f.columns = {{3, 3, 3}};
    f.index = {0, 1, 2};
    CHECK_THROWS_AS(fit_scaler(f, 0, 3), ConstantColumn);
}

TEST_CASE("transform maps the fit range onto [0,1] without clipping outside") {
    FeatureFrame f;
    f.names = {"close"};
    f.columns = {{2, 4, 6, 8}};
    f.index = {0, 1, 2, 3};
    const Scaler s = fit_scaler(f, 0, 3); // min 2, max 6
    const FeatureFrame t = transform(f, s);
    CHECK(t.columns[0][0] == doctest::Approx(0.0));
    CHECK(t.columns[0][1] == doctest::Approx(0.5));
    CHECK(t.columns[0][2] == doctest::Approx(1.0));
    CHECK(t.columns[0][3] == doctest::Approx(1.5)); // no clipping

    CHECK(inverse_transform(0.5, s, "close") == doctest::Approx(4.0));
    CHECK(inverse_transform(0.0, s, "close") == doctest::Approx(2.0));
    CHECK(inverse_transform(1.0, s, "close") == doctest::Approx(6.0));
}

TEST_CASE("transform/inverse_transform round trip is the identity (property)") {
    const FeatureFrame f = toy_frame(200, 4, 31);
    const Scaler s = fit_scaler(f, 0, 200);
    const FeatureFrame t = transform(f, s);
    for (std::size_t c = 0; c < f.cols(); ++c) {
        const auto back = inverse_transform(t.columns[c], s, f.names[c]);
        for (std::size_t r = 0; r < f.rows(); ++r)
            CHECK(std::abs(back[r] - f.columns[c][r]) < 1e-12 * std::max(1.0, std::abs(f.columns[c][r])));
    }
}

TEST_CASE("transform rejects mismatched columns") {
    const FeatureFrame f = toy_frame(10, 2, 1);
    FeatureFrame g = f;
    g.names[1] = "other";
    const Scaler s = fit_scaler(f, 0, 10);
    CHECK_THROWS_AS(transform(g, s), ColumnMismatch);
    CHECK_THROWS_AS(inverse_transform(0.5, s, "nope"), ColumnMismatch);
}

TEST_CASE("make_windows produces T - W aligned pairs") {
    const FeatureFrame f = toy_frame(40, 3, 7);
    const WindowedDataset ds = make_windows(f, 5);
    CHECK(ds.size() == 35);
    CHECK(ds.W == 5);
    CHECK(ds.F == 3);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        // final row of each window equals frame row i+W-1
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(ds.X[i][4 * 3 + c] == f.columns[c][i + 4]);
        CHECK(ds.y[i] == f.column("close")[i + 5]);
        CHECK(ds.target_rows[i] == i + 5);
    }
}

TEST_CASE("make_windows boundary cases") {
    const FeatureFrame one = toy_frame(25, 1, 2);
    CHECK(make_windows(one, 24).size() == 1);
    CHECK(make_windows(one, 24).X[0].size() == 24); // 24 x 1
    const FeatureFrame tiny = toy_frame(24, 1, 2);
    CHECK_THROWS_AS(make_windows(tiny, 24), SeriesTooShort);
}

TEST_CASE("window count identity over random sizes (property)") {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t W = 2 + rng() % 30;
        const std::size_t T = W + 1 + rng() % 100;
        const FeatureFrame f = toy_frame(T, 1 + rng() % 4, rng());
        CHECK(make_windows(f, W).size() == T - W);
    }
}

TEST_CASE("split reproduces the published 7586/1626/1626 counts") {
    const std::size_t T = 10862, W = 24;
    const FeatureFrame f = toy_frame(T, 1, 13);
    WindowedDataset ds = make_windows(f, W);
    REQUIRE(ds.size() == 10838);
    split(ds, {0.70, 0.15, 0.15});
    CHECK(ds.train.count() == 7586);
    CHECK(ds.val.count() == 1626);
    CHECK(ds.test.count() == 1626);
    CHECK(ds.train.begin == 0);
    CHECK(ds.val.begin == ds.train.end);
    CHECK(ds.test.begin == ds.val.end);
    CHECK(ds.test.end == ds.size());
}

TEST_CASE("split small-N remainder goes to the last segment") {
    FeatureFrame f = toy_frame(15, 1, 3);
    WindowedDataset ds = make_windows(f, 5); // N = 10
    split(ds, {0.7, 0.15, 0.15});
    CHECK(ds.train.count() == 7);
    CHECK(ds.val.count() == 1);
    CHECK(ds.test.count() == 2);
}

TEST_CASE("split rejects empty segments") {
    FeatureFrame f = toy_frame(15, 1, 3);
    WindowedDataset ds = make_windows(f, 5);
    CHECK_THROWS_AS(split(ds, {0.5, 0.5, 0.0}), EmptySplit);
}

TEST_CASE("split order variants are disjoint, contiguous, exhaustive") {
    FeatureFrame f = toy_frame(124, 2, 8);
    WindowedDataset ds = make_windows(f, 24);
    split(ds, {0.7, 0.15, 0.15}, SplitOrder::train_test_val);
    CHECK(ds.train.end == ds.test.begin);
    CHECK(ds.test.end == ds.val.begin);
    CHECK(ds.val.end == ds.size());
    CHECK(ds.train.count() + ds.val.count() + ds.test.count() == ds.size());
}

TEST_CASE("no leakage: train window rows precede test target rows") {
    FeatureFrame f = toy_frame(300, 2, 44);
    WindowedDataset ds = make_windows(f, 24);
    split(ds, {0.7, 0.15, 0.15});
    std::size_t max_train_row = 0;
    for (std::size_t i = ds.train.begin; i < ds.train.end; ++i)
        max_train_row = std::max(max_train_row, ds.target_rows[i]);
    for (std::size_t i = ds.test.begin; i < ds.test.end; ++i) CHECK(max_train_row < ds.target_rows[i]);
}

TEST_CASE("dataset binary round trip") {
    FeatureFrame f = toy_frame(120, 3, 66);
    WindowedDataset ds = make_windows(f, 24);
    split(ds, {0.7, 0.15, 0.15});
    const std::string path = (std::filesystem::temp_directory_path() / "ds_rt.bin").string();
    save_dataset(ds, path);
    const WindowedDataset back = load_dataset(path);
    REQUIRE(back.size() == ds.size());
    CHECK(back.W == ds.W);
    CHECK(back.F == ds.F);
    CHECK(back.train.begin == ds.train.begin);
    CHECK(back.test.end == ds.test.end);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.y[i] == ds.y[i]);
        CHECK(back.X[i] == ds.X[i]);
        CHECK(back.target_times[i] == ds.target_times[i]);
    }
}
