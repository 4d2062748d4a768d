#include "drltrade/error.hpp"
#include "drltrade/metrics.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using namespace drltrade;

std::vector<double> geometric(double v0, double rate, std::size_t points) {
    std::vector<double> c(points);
    for (std::size_t i = 0; i < points; ++i) c[i] = v0 * std::pow(1.0 + rate, static_cast<double>(i));
    return c;
}

TEST(AnnualizedReturn, Examples) {
    EXPECT_EQ(annualized_return(std::vector<double>(10, 5.0)), 0.0);
    std::vector<double> doubling(253);
    for (std::size_t i = 0; i < doubling.size(); ++i) doubling[i] = std::exp2(static_cast<double>(i) / 252.0);
    EXPECT_NEAR(annualized_return(doubling), 1.0, 1e-12);
    EXPECT_NEAR(annualized_return(std::vector<double>{10000.0, 10100.0, 10201.0}), std::pow(1.0201, 126.0) - 1.0,
                1e-9);
}

TEST(AnnualizedReturn, Errors) {
    EXPECT_THROW(annualized_return(std::vector<double>{1.0}), Error);
    EXPECT_THROW(annualized_return(std::vector<double>{1.0, 0.0}), Error);
    EXPECT_THROW(annualized_return(std::vector<double>{1.0, -2.0}), Error);
}

TEST(AnnualizedStd, Examples) {
    EXPECT_EQ(annualized_std(std::vector<double>(10, 5.0)), 0.0);
    EXPECT_LT(annualized_std(geometric(100.0, 0.003, 50)), kZeroVolatility);
    const std::vector<double> alt{100.0, 101.0, 99.99, 100.9899, 99.980001};
    EXPECT_NEAR(annualized_std(alt), 0.01 * std::sqrt(4.0 / 3.0) * std::sqrt(252.0), 1e-9);
    EXPECT_THROW(annualized_std(std::vector<double>{1.0, 2.0}), Error);
}

TEST(Sharpe, Examples) {
    EXPECT_DOUBLE_EQ(*sharpe(0.10, 0.05), 2.0);
    EXPECT_EQ(*sharpe(0.03, 0.2, 0.03), 0.0);
    EXPECT_FALSE(sharpe(0.1, 0.0).has_value());
    EXPECT_THROW(sharpe(0.1, -0.1), Error);
}

std::vector<Date> dates_for(std::size_t n) { return oracle::make_series(std::vector<std::vector<double>>(n, {1.0})).dates; }

TEST(BuildReport, FlatCurve) {
    const auto r = build_report("cash", dates_for(20), std::vector<double>(20, 10000.0));
    EXPECT_EQ(r.initial_value, 10000.0);
    EXPECT_EQ(r.final_value, 10000.0);
    EXPECT_EQ(r.annualized_return, 0.0);
    EXPECT_EQ(r.annualized_std, 0.0);
    EXPECT_FALSE(r.sharpe.has_value());
    EXPECT_TRUE(to_json(r)["sharpe"].is_null());
}

TEST(BuildReport, OnePercentPerDay) {
    const auto r = build_report("up", dates_for(253), geometric(10000.0, 0.01, 253));
    EXPECT_NEAR(r.annualized_return, std::pow(1.01, 252.0) - 1.0, 1e-9 * std::pow(1.01, 252.0));
    EXPECT_LT(r.annualized_std, kZeroVolatility);
    EXPECT_FALSE(r.sharpe.has_value());
}

TEST(BuildReport, JsonAndCsvShape) {
    const auto r = build_report("x", dates_for(3), {100.0, 110.0, 99.0});
    const auto j = to_json(r);
    for (const char* key : {"strategy", "initial_value", "final_value", "annualized_return", "annualized_std", "sharpe"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j.size(), 6u);
    EXPECT_EQ(curve_csv(r), "date,value\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n");
    EXPECT_THROW(build_report("x", dates_for(2), {1.0, 2.0, 3.0}), Error);
}

TEST(Metrics, ScaleInvariance) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0005, 0.01);
    std::vector<double> c{1000.0};
    for (int i = 0; i < 300; ++i) c.push_back(c.back() * (1.0 + g(rng)));
    for (double k : {1e-3, 0.5, 7.0, 1e6}) {
        std::vector<double> scaled = c;
        for (double& v : scaled) v *= k;
        EXPECT_NEAR(annualized_return(scaled), annualized_return(c), 1e-12);
        EXPECT_NEAR(annualized_std(scaled), annualized_std(c), 1e-12);
        EXPECT_NEAR(*sharpe(annualized_return(scaled), annualized_std(scaled)),
                    *sharpe(annualized_return(c), annualized_std(c)), 1e-12);
    }
}

TEST(Metrics, SignCoherence) {
    EXPECT_GT(annualized_return(std::vector<double>{1.0, 1.1, 1.15, 1.3}), 0.0);
    EXPECT_LT(annualized_return(std::vector<double>{1.3, 1.2, 1.15, 1.0}), 0.0);
}

}  // namespace
