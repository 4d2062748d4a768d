#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drltrade {

using Date = std::chrono::year_month_day;

// Parses an ISO-8601 calendar date (YYYY-MM-DD). Throws on malformed input.
Date parse_date(std::string_view text);
std::string format_date(const Date& d);

/// Daily closing prices aligned into a dense dates x tickers matrix.
///
/// Invariants: dates strictly increasing, prices strictly positive and finite,
/// prices.rows() == dates.size(), prices.cols() == tickers.size().
struct PriceSeries {
    std::vector<Date> dates;
    std::vector<std::string> tickers;
    Eigen::MatrixXd prices;

    std::size_t num_days() const { return dates.size(); }
    std::size_t num_tickers() const { return tickers.size(); }

    // Throws if any invariant is violated.
    void validate() const;

    // Rows [first, first + count).
    PriceSeries slice(std::size_t first, std::size_t count) const;

    bool operator==(const PriceSeries&) const = default;
};

// Concatenates two series over the same tickers; b must start after a ends.
PriceSeries concat(const PriceSeries& a, const PriceSeries& b);

struct LoadedPrices {
    PriceSeries series;
    std::size_t dropped_dates = 0;  // dates discarded for lacking a quote
};

/// Reads a long-format (date,ticker,close) or wide-format (date,<tickers...>)
/// CSV. The format is detected from the header. Dates missing a quote for any
/// ticker of the universe are dropped and counted.
LoadedPrices load_price_table(const std::filesystem::path& path,
                              const std::optional<std::vector<std::string>>& universe = std::nullopt);

// Same as load_price_table but reads from an in-memory document.
LoadedPrices parse_price_table(std::string_view text,
                               const std::optional<std::vector<std::string>>& universe = std::nullopt);

// Wide CSV with shortest round-trip decimal formatting of every price.
std::string to_wide_csv(const PriceSeries& series);
void write_wide_csv(const std::filesystem::path& path, const PriceSeries& series);

struct PeriodSplit {
    PriceSeries train;
    PriceSeries validation;
    PriceSeries trade;
};

/// Splits at two boundary dates. A boundary date belongs to the earlier
/// period; every period must keep at least two dates.
PeriodSplit split_periods(const PriceSeries& series, const Date& train_end, const Date& validation_end);

enum class GeneratorKind { Trend, RandomWalk };

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::Trend;
    std::size_t days = 2;
    std::vector<double> initial_price;  // one per ticker
    std::vector<double> drift;          // per-day drift, one per ticker
    std::vector<double> volatility;     // per-day log volatility, random walk only
    std::vector<std::string> names;     // defaults to S1..SD
    std::uint64_t seed = 0;
    Date start = Date{std::chrono::year{2016}, std::chrono::month{1}, std::chrono::day{4}};

    bool operator==(const GeneratorSpec&) const = default;
};

/// Deterministic price fixtures.
///
/// Trend: price[t] = p0 * (1 + drift)^t.
/// RandomWalk: geometric random walk, price[t+1] = price[t] * exp(drift - vol^2/2 + vol * z).
/// Dates advance over weekdays starting at spec.start.
PriceSeries synthetic_series(const GeneratorSpec& spec);

/// Simple daily returns: returns(t, d) = prices(t+1, d) / prices(t, d) - 1.
Eigen::MatrixXd daily_returns(const PriceSeries& series);

}  // namespace drltrade
