#include "drltrade/error.hpp"
#include "drltrade/marketdata.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <functional>

namespace {

using namespace drltrade;
using std::chrono::day;
using std::chrono::month;
using std::chrono::year;

Date ymd(int y, unsigned m, unsigned d) { return Date{year{y}, month{m}, day{d}}; }

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::Numeric;
}

TEST(Dates, ParseAndFormat) {
    EXPECT_EQ(parse_date("2016-01-04"), ymd(2016, 1, 4));
    EXPECT_EQ(format_date(ymd(2009, 12, 31)), "2009-12-31");
    EXPECT_THROW(parse_date("2016-13-01"), Error);
    EXPECT_THROW(parse_date("2016/01/01"), Error);
    EXPECT_THROW(parse_date("2015-02-29"), Error);
}

TEST(LoadPriceTable, MinimalWide) {
    const auto loaded = parse_price_table("date,X\n2020-01-01,10\n2020-01-02,11\n2020-01-03,12\n");
    EXPECT_EQ(loaded.series.num_days(), 3u);
    EXPECT_EQ(loaded.series.num_tickers(), 1u);
    EXPECT_DOUBLE_EQ(loaded.series.prices(2, 0), 12.0);
    EXPECT_EQ(loaded.dropped_dates, 0u);
}

TEST(LoadPriceTable, NegativePriceRejected) {
    EXPECT_EQ(kind_of([] { parse_price_table("date,X\n2020-01-01,10\n2020-01-02,-5\n2020-01-03,12\n"); }),
              ErrorKind::Io);
    EXPECT_EQ(kind_of([] { parse_price_table("date,X\n2020-01-01,10\n2020-01-02,0\n2020-01-03,12\n"); }),
              ErrorKind::Io);
}

TEST(LoadPriceTable, LongFormatDropsIncompleteDates) {
    const std::string text =
        "date,ticker,close\n"
        "2020-01-01,A,1\n2020-01-01,B,2\n"
        "2020-01-02,A,3\n"
        "2020-01-03,B,5\n2020-01-03,A,4\n";
    const auto loaded = parse_price_table(text);
    EXPECT_EQ(loaded.series.num_days(), 2u);
    EXPECT_EQ(loaded.dropped_dates, 1u);
    EXPECT_EQ(loaded.series.dates[1], ymd(2020, 1, 3));
    ASSERT_EQ(loaded.series.tickers, (std::vector<std::string>{"A", "B"}));
    EXPECT_DOUBLE_EQ(loaded.series.prices(1, 0), 4.0);
    EXPECT_DOUBLE_EQ(loaded.series.prices(1, 1), 5.0);
}

TEST(LoadPriceTable, UniverseRestrictsAndValidates) {
    const std::string text = "date,A,B,C\n2020-01-01,1,2,3\n2020-01-02,1,2,3\n";
    const auto loaded = parse_price_table(text, std::vector<std::string>{"C", "A"});
    ASSERT_EQ(loaded.series.tickers, (std::vector<std::string>{"C", "A"}));
    EXPECT_DOUBLE_EQ(loaded.series.prices(0, 0), 3.0);
    EXPECT_EQ(kind_of([&] { parse_price_table(text, std::vector<std::string>{"A", "Z"}); }), ErrorKind::Config);
}

TEST(LoadPriceTable, TooFewDatesAndGarbage) {
    EXPECT_EQ(kind_of([] { parse_price_table("date,X\n2020-01-01,10\n"); }), ErrorKind::Io);
    EXPECT_EQ(kind_of([] { parse_price_table("date,X\n2020-01-01,ten\n2020-01-02,11\n"); }), ErrorKind::Io);
    EXPECT_EQ(kind_of([] { load_price_table("/nonexistent/prices.csv"); }), ErrorKind::Io);
}

TEST(WideCsv, RoundTripIsBitExact) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::RandomWalk;
    spec.days = 50;
    spec.initial_price = {12.345678901234, 0.1, 999.0};
    spec.drift = {0.001, -0.002, 0.0};
    spec.volatility = {0.02, 0.03, 0.01};
    spec.seed = 42;
    const PriceSeries s = synthetic_series(spec);
    const auto dir = oracle::scratch_dir("wide_round_trip");
    write_wide_csv(dir / "p.csv", s);
    EXPECT_EQ(load_price_table(dir / "p.csv").series, s);
}

PriceSeries weekdays_2009_to_2018() {
    GeneratorSpec spec;
    spec.days = 2600;
    spec.initial_price = {1.0};
    spec.drift = {0.0};
    spec.start = ymd(2009, 1, 1);
    PriceSeries s = synthetic_series(spec);
    while (s.dates.back() > ymd(2018, 9, 30)) {
        s = s.slice(0, s.num_days() - 1);
    }
    return s;
}

TEST(SplitPeriods, ThreePeriodLayout) {
    const PriceSeries s = weekdays_2009_to_2018();
    const PeriodSplit split = split_periods(s, ymd(2014, 12, 31), ymd(2016, 1, 1));
    EXPECT_EQ(split.train.dates.front(), ymd(2009, 1, 1));
    EXPECT_EQ(split.train.dates.back(), ymd(2014, 12, 31));
    EXPECT_EQ(split.validation.dates.front(), ymd(2015, 1, 1));
    EXPECT_EQ(split.validation.dates.back(), ymd(2016, 1, 1));
    EXPECT_EQ(split.trade.dates.front(), ymd(2016, 1, 4));
    EXPECT_EQ(split.trade.dates.back(), ymd(2018, 9, 28));
}

TEST(SplitPeriods, HandTraceTwoTwoTwo) {
    const auto s = oracle::make_series({{1}, {2}, {3}, {4}, {5}, {6}});
    const auto split = split_periods(s, s.dates[1], s.dates[3]);
    EXPECT_EQ(split.train.num_days(), 2u);
    EXPECT_EQ(split.validation.num_days(), 2u);
    EXPECT_EQ(split.trade.num_days(), 2u);
    EXPECT_DOUBLE_EQ(split.validation.prices(0, 0), 3.0);
}

TEST(SplitPeriods, Errors) {
    const auto s = oracle::make_series({{1}, {2}, {3}, {4}, {5}, {6}});
    EXPECT_THROW(split_periods(s, ymd(2019, 1, 1), s.dates[3]), Error);
    EXPECT_THROW(split_periods(s, s.dates[3], s.dates[1]), Error);
    EXPECT_THROW(split_periods(s, s.dates[0], s.dates[3]), Error);
}

TEST(SplitPeriods, ConcatenationReproducesDates) {
    std::mt19937_64 rng(3);
    const PriceSeries s = weekdays_2009_to_2018();
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<std::size_t> pick(1, s.num_days() - 5);
        const std::size_t i = pick(rng);
        std::uniform_int_distribution<std::size_t> pick2(i + 2, s.num_days() - 3);
        const std::size_t j = pick2(rng);
        const auto split = split_periods(s, s.dates[i], s.dates[j]);
        std::vector<Date> all = split.train.dates;
        all.insert(all.end(), split.validation.dates.begin(), split.validation.dates.end());
        all.insert(all.end(), split.trade.dates.begin(), split.trade.dates.end());
        ASSERT_EQ(all, s.dates);
        EXPECT_EQ(concat(concat(split.train, split.validation), split.trade), s);
    }
}

TEST(Synthetic, TrendCompounding) {
    GeneratorSpec spec;
    spec.days = 3;
    spec.initial_price = {100.0};
    spec.drift = {0.01};
    const auto s = synthetic_series(spec);
    EXPECT_DOUBLE_EQ(s.prices(0, 0), 100.0);
    EXPECT_DOUBLE_EQ(s.prices(1, 0), 101.0);
    EXPECT_DOUBLE_EQ(s.prices(2, 0), 102.01);
    EXPECT_EQ(s.tickers, std::vector<std::string>{"S1"});
}

TEST(Synthetic, ZeroDriftIsConstant) {
    GeneratorSpec spec;
    spec.days = 20;
    spec.initial_price = {100.0};
    spec.drift = {0.0};
    const auto s = synthetic_series(spec);
    EXPECT_TRUE((s.prices.array() == 100.0).all());
}

TEST(Synthetic, RandomWalkDeterministicPerSeed) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::RandomWalk;
    spec.days = 100;
    spec.initial_price = {10.0, 20.0};
    spec.drift = {0.0, 0.001};
    spec.volatility = {0.02, 0.01};
    spec.seed = 9;
    const auto a = synthetic_series(spec);
    EXPECT_EQ(a, synthetic_series(spec));
    spec.seed = 10;
    EXPECT_NE(a.prices, synthetic_series(spec).prices);
}

TEST(Synthetic, DatesAreWeekdays) {
    GeneratorSpec spec;
    spec.days = 30;
    spec.initial_price = {1.0};
    spec.drift = {0.0};
    for (const auto& d : synthetic_series(spec).dates) {
        const std::chrono::weekday wd{std::chrono::sys_days{d}};
        EXPECT_NE(wd, std::chrono::Saturday);
        EXPECT_NE(wd, std::chrono::Sunday);
    }
}

TEST(Synthetic, InvalidParams) {
    GeneratorSpec spec;
    spec.days = 5;
    spec.initial_price = {0.0};
    spec.drift = {0.0};
    EXPECT_THROW(synthetic_series(spec), Error);
    spec.initial_price = {1.0};
    spec.drift = {-1.0};
    EXPECT_THROW(synthetic_series(spec), Error);
    spec.drift = {0.0};
    spec.days = 1;
    EXPECT_THROW(synthetic_series(spec), Error);
}

TEST(DailyReturns, HandArithmetic) {
    const auto r = daily_returns(oracle::make_series({{100}, {110}, {99}}));
    ASSERT_EQ(r.rows(), 2);
    EXPECT_NEAR(r(0, 0), 0.10, 1e-15);
    EXPECT_NEAR(r(1, 0), -0.10, 1e-15);
    EXPECT_TRUE((daily_returns(oracle::make_series({{100}, {100}})).array() == 0.0).all());
    EXPECT_THROW(daily_returns(oracle::make_series({{100}})), Error);
}

TEST(DailyReturns, TrendYieldsConstantDrift) {
    GeneratorSpec spec;
    spec.days = 300;
    spec.initial_price = {37.0, 5.0};
    spec.drift = {0.0123, -0.004};
    const auto r = daily_returns(synthetic_series(spec));
    for (Eigen::Index t = 0; t < r.rows(); ++t) {
        EXPECT_LE(std::abs(r(t, 0) - 0.0123), 1e-12 * 0.0123);
        EXPECT_LE(std::abs(r(t, 1) + 0.004), 1e-12 * 0.004);
    }
}

}  // namespace
