#include "drltrade/metrics.hpp"

#include "drltrade/error.hpp"

#include <cmath>
#include <cstdio>

namespace drltrade {

namespace {

void require_positive(std::span<const double> curve) {
    for (double v : curve) {
        if (!std::isfinite(v) || v <= 0.0) throw numeric_error("value curve must be positive and finite");
    }
}

}  // namespace

double annualized_return(std::span<const double> curve, double periods_per_year) {
    if (curve.size() < 2) throw numeric_error("annualized return needs at least 2 curve points");
    require_positive(curve);
    const double periods = static_cast<double>(curve.size() - 1);
    return std::pow(curve.back() / curve.front(), periods_per_year / periods) - 1.0;
}

double annualized_std(std::span<const double> curve, double periods_per_year) {
    if (curve.size() < 3) throw numeric_error("annualized std needs at least 3 curve points");
    require_positive(curve);
    const std::size_t n = curve.size() - 1;
    std::vector<double> returns(n);
    for (std::size_t i = 0; i < n; ++i) returns[i] = curve[i + 1] / curve[i] - 1.0;
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double r : returns) ss += (r - mean) * (r - mean);
    return std::sqrt(ss / static_cast<double>(n - 1)) * std::sqrt(periods_per_year);
}

std::optional<double> sharpe(double annualized_return, double annualized_std, double risk_free) {
    if (!(annualized_std >= 0.0)) throw numeric_error("annualized std must be non-negative");
    if (annualized_std <= kZeroVolatility) return std::nullopt;
    return (annualized_return - risk_free) / annualized_std;
}

BacktestReport build_report(std::string strategy, std::vector<Date> dates, std::vector<double> values,
                            double periods_per_year, double risk_free) {
    if (values.empty()) throw numeric_error("empty value curve");
    if (dates.size() != values.size()) throw numeric_error("curve dates and values differ in length");
    BacktestReport r;
    r.strategy = std::move(strategy);
    r.initial_value = values.front();
    r.final_value = values.back();
    r.annualized_return = annualized_return(values, periods_per_year);
    r.annualized_std = annualized_std(values, periods_per_year);
    r.sharpe = sharpe(r.annualized_return, r.annualized_std, risk_free);
    r.dates = std::move(dates);
    r.values = std::move(values);
    return r;
}

nlohmann::json to_json(const BacktestReport& report) {
    nlohmann::json out;
    out["strategy"] = report.strategy;
    out["initial_value"] = report.initial_value;
    out["final_value"] = report.final_value;
    out["annualized_return"] = report.annualized_return;
    out["annualized_std"] = report.annualized_std;
    out["sharpe"] = report.sharpe ? nlohmann::json(*report.sharpe) : nlohmann::json(nullptr);
    return out;
}

std::string curve_csv(const BacktestReport& report) {
    std::string out = "date,value\n";
    char buf[64];
    for (std::size_t i = 0; i < report.values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), ",%.17g\n", report.values[i]);
        out += format_date(report.dates[i]) + buf;
    }
    return out;
}

}  // namespace drltrade
