#pragma once

#include "drltrade/marketdata.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace drltrade {

inline constexpr double kTradingDaysPerYear = 252.0;

// Annualized volatilities at or below this are treated as zero when forming a Sharpe ratio.
inline constexpr double kZeroVolatility = 1e-12;

/// Geometric annualized return (V_last / V_first)^(periods_per_year / (n - 1)) - 1.
double annualized_return(std::span<const double> curve, double periods_per_year = kTradingDaysPerYear);

/// Sample standard deviation (divisor n - 1) of simple period returns, scaled by
/// sqrt(periods_per_year). Needs at least three curve points.
double annualized_std(std::span<const double> curve, double periods_per_year = kTradingDaysPerYear);

/// Excess return over volatility. Empty when the volatility is zero: the ratio
/// is undefined, not infinite.
std::optional<double> sharpe(double annualized_return, double annualized_std, double risk_free = 0.0);

struct BacktestReport {
    std::string strategy;
    std::vector<Date> dates;
    std::vector<double> values;
    double initial_value = 0.0;
    double final_value = 0.0;
    double annualized_return = 0.0;
    double annualized_std = 0.0;
    std::optional<double> sharpe;

    bool operator==(const BacktestReport&) const = default;
};

BacktestReport build_report(std::string strategy, std::vector<Date> dates, std::vector<double> values,
                            double periods_per_year = kTradingDaysPerYear, double risk_free = 0.0);

// {strategy, initial_value, final_value, annualized_return, annualized_std, sharpe}; sharpe is null when undefined.
nlohmann::json to_json(const BacktestReport& report);

// CSV `date,value`.
std::string curve_csv(const BacktestReport& report);

}  // namespace drltrade
