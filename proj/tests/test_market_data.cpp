#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "finforecast/market_data.hpp"
#include "support/synthetic.hpp"

using namespace finforecast;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream(path) << content;
    return path;
}

} // namespace

TEST_CASE("parse_csv maps fields directly") {
    const auto path = write_temp("md_basic.csv",
                                 "timestamp,open,high,low,close,volume\n"
                                 "2015-01-01T09:15,100,101,99,100.5,2000\n");
    const OhlcvSeries s = parse_csv(path);
    REQUIRE(s.size() == 1);
    CHECK(s.bars[0].open == 100.0);
    CHECK(s.bars[0].high == 101.0);
    CHECK(s.bars[0].low == 99.0);
    CHECK(s.bars[0].close == 100.5);
    CHECK(s.bars[0].volume == 2000);
    CHECK(format_timestamp(s.bars[0].timestamp) == "2015-01-01T09:15:00");
}

TEST_CASE("parse_csv handles custom schema and column order") {
    const auto path = write_temp("md_schema.csv",
                                 "Vol,Close,Low,High,Open,Date\n"
                                 "10,4,1,5,2,2020-06-01 10:00:00\n");
    CsvSchema schema;
    schema.timestamp = "Date";
    schema.open = "Open";
    schema.high = "High";
    schema.low = "Low";
    schema.close = "Close";
    schema.volume = "Vol";
    const OhlcvSeries s = parse_csv(path, schema);
    REQUIRE(s.size() == 1);
    CHECK(s.bars[0].open == 2.0);
    CHECK(s.bars[0].volume == 10);
}

TEST_CASE("parse_csv rejects invariant-violating rows with line numbers") {
    const auto path = write_temp("md_bad.csv",
                                 "timestamp,open,high,low,close,volume\n"
                                 "2015-01-01T09:15,100,99,101,100,5\n");
    CHECK_THROWS_AS(parse_csv(path), InvariantViolation);
    try {
        parse_csv(path);
    } catch (const InvariantViolation& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("parse_csv error paths") {
    CHECK_THROWS_AS(parse_csv(write_temp("md_col.csv", "time,open,high,low,close,volume\n")),
                    MissingColumn);
    CHECK_THROWS_AS(parse_csv(write_temp("md_num.csv",
                                         "timestamp,open,high,low,close,volume\n"
                                         "2015-01-01T09:15,abc,1,1,1,1\n")),
                    UnparseableRow);
    CHECK_THROWS_AS(parse_csv(write_temp("md_vol.csv",
                                         "timestamp,open,high,low,close,volume\n"
                                         "2015-01-01T09:15,1,1,1,1,-3\n")),
                    InvariantViolation);
    CHECK_THROWS_AS(parse_csv(write_temp("md_order.csv",
                                         "timestamp,open,high,low,close,volume\n"
                                         "2015-01-01T09:15,1,1,1,1,1\n"
                                         "2015-01-01T09:10,1,1,1,1,1\n")),
                    InvariantViolation);
}

TEST_CASE("empty file yields empty series") {
    const OhlcvSeries s = parse_csv(write_temp("md_empty.csv", ""));
    CHECK(s.empty());
}

TEST_CASE("resample aggregates one hour of 5-minute bars") {
    OhlcvSeries s;
    s.interval_seconds = 300;
    std::int64_t t0 = 0;
    REQUIRE(parse_timestamp("2020-01-02T10:00", t0));
    s.bars.push_back({t0, 10, 12, 9, 11, 5});
    s.bars.push_back({t0 + 300, 11, 13, 10, 12, 7});
    const OhlcvSeries hourly = resample(s, 3600);
    REQUIRE(hourly.size() == 1);
    CHECK(hourly.bars[0].open == 10.0);
    CHECK(hourly.bars[0].high == 13.0);
    CHECK(hourly.bars[0].low == 9.0);
    CHECK(hourly.bars[0].close == 12.0);
    CHECK(hourly.bars[0].volume == 12);
    CHECK(hourly.bars[0].timestamp == t0);
}

TEST_CASE("12 consecutive 5-minute bars collapse to one hourly bar") {
    OhlcvSeries s;
    s.interval_seconds = 300;
    std::int64_t t0 = 0;
    REQUIRE(parse_timestamp("2020-01-02T10:00", t0));
    for (int i = 0; i < 12; ++i)
        s.bars.push_back({t0 + i * 300, 10, 11, 9, 10, 1});
    CHECK(resample(s, 3600).size() == 1);
}

TEST_CASE("single bar in a bucket survives unchanged at bucket timestamp") {
    OhlcvSeries s;
    s.interval_seconds = 300;
    std::int64_t t0 = 0;
    REQUIRE(parse_timestamp("2020-01-02T10:35", t0));
    s.bars.push_back({t0, 5, 6, 4, 5, 3});
    const OhlcvSeries hourly = resample(s, 3600);
    REQUIRE(hourly.size() == 1);
    CHECK(hourly.bars[0].open == 5.0);
    CHECK(hourly.bars[0].close == 5.0);
    CHECK(format_timestamp(hourly.bars[0].timestamp) == "2020-01-02T10:00:00");
}

TEST_CASE("resample rejects incompatible intervals") {
    OhlcvSeries s;
    s.interval_seconds = 420;
    s.bars.push_back({0, 1, 1, 1, 1, 1});
    CHECK_THROWS_AS(resample(s, 3600), IncompatibleInterval);
}

TEST_CASE("resample is idempotent at equal intervals") {
    const auto close = ffsupport::random_walk(50, 11);
    const OhlcvSeries s = ffsupport::series_from_close(close);
    const OhlcvSeries r = resample(s, s.interval_seconds);
    REQUIRE(r.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(r.bars[i].timestamp == s.bars[i].timestamp);
        CHECK(r.bars[i].close == s.bars[i].close);
    }
}

TEST_CASE("resample conserves volume and Bar invariants (property)") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        OhlcvSeries s;
        s.interval_seconds = 300;
        std::int64_t ts = 1577960100; // 2020-01-02T09:35
        std::int64_t total_volume = 0;
        const int n = 20 + static_cast<int>(rng() % 100);
        double level = 50.0 + ffsupport::uniform01(rng) * 100.0;
        for (int i = 0; i < n; ++i) {
            // random gaps keep some buckets empty
            ts += 300 * (1 + static_cast<std::int64_t>(rng() % 4));
            Bar b;
            const double next = level + ffsupport::gaussian(rng);
            b.open = level;
            b.close = next;
            b.high = std::max(b.open, b.close) + ffsupport::uniform01(rng);
            b.low = std::min(b.open, b.close) - ffsupport::uniform01(rng);
            b.volume = static_cast<std::int64_t>(rng() % 1000);
            b.timestamp = ts;
            total_volume += b.volume;
            s.bars.push_back(b);
            level = next;
        }
        const OhlcvSeries hourly = resample(s, 3600);
        std::int64_t resampled_volume = 0;
        for (const Bar& b : hourly.bars) {
            CHECK(b.valid());
            resampled_volume += b.volume;
        }
        CHECK(resampled_volume == total_volume);
        CHECK(hourly.size() <= s.size());
        for (std::size_t i = 1; i < hourly.size(); ++i)
            CHECK(hourly.bars[i].timestamp > hourly.bars[i - 1].timestamp);
    }
}

TEST_CASE("gapless resample respects the ceil(count/ratio) bound (property)") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 200;
        OhlcvSeries s = ffsupport::series_from_close(ffsupport::random_walk(n, rng()));
        // contiguous 5-minute bars starting on an hour boundary
        s.interval_seconds = 300;
        for (std::size_t i = 0; i < n; ++i)
            s.bars[i].timestamp = 1577959200 + static_cast<std::int64_t>(i) * 300;
        const OhlcvSeries hourly = resample(s, 3600);
        CHECK(hourly.size() <= (n + 11) / 12);
    }
}

TEST_CASE("export/parse round trip preserves bars") {
    const OhlcvSeries s = ffsupport::series_from_close(ffsupport::random_walk(30, 5));
    const std::string path = (std::filesystem::temp_directory_path() / "md_rt.csv").string();
    export_csv(s, path);
    const OhlcvSeries back = parse_csv(path);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(back.bars[i].timestamp == s.bars[i].timestamp);
        CHECK(back.bars[i].open == doctest::Approx(s.bars[i].open).epsilon(1e-9));
        CHECK(back.bars[i].volume == s.bars[i].volume);
    }
}
