#pragma once

#include "drltrade/marketdata.hpp"
#include "drltrade/metrics.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <vector>

namespace drltrade {

/// Unbiased sample covariance (divisor window - 1) of the last `window` rows of
/// a returns matrix (rows = periods, columns = assets).
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& returns, Eigen::Index window);

/// Euclidean projection onto the probability simplex {w : w >= 0, sum(w) = 1}.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

struct MinVarianceOptions {
    double ridge = 1e-8;
    int max_iterations = 10000;
    double tolerance = 1e-12;  // objective improvement, on the trace-normalized problem
};

struct MinVarianceSolution {
    Eigen::VectorXd weights;
    double objective = 0.0;  // w^T (sigma + ridge I) w
    int iterations = 0;
    std::vector<double> objective_trace;  // objective after each iterate, starting at the uniform point
};

/// Long-only minimum variance by projected gradient descent on the simplex,
/// started from the uniform allocation with step 1 / Lipschitz constant.
MinVarianceSolution solve_min_variance(const Eigen::MatrixXd& sigma, const MinVarianceOptions& options = {});

Eigen::VectorXd min_variance_weights(const Eigen::MatrixXd& sigma, double ridge = 1e-8);

struct MinVarianceParams {
    Eigen::Index lookback = 252;
    Eigen::Index rebalance_every = 21;
    double ridge = 1e-8;

    bool operator==(const MinVarianceParams&) const = default;
};

struct RebalanceEvent {
    std::size_t t = 0;  // row of the input series
    double value_before = 0.0;
    double value_after = 0.0;
    Eigen::VectorXd weights;
};

struct MinVarianceRun {
    BacktestReport report;
    std::vector<RebalanceEvent> rebalances;
};

/// Min-variance strategy with fractional shares. The first `lookback` rows of
/// `series` are history only: the value curve starts at row `lookback` with
/// `initial_balance`, rebalancing there and every `rebalance_every` rows after.
MinVarianceRun run_min_variance_detailed(const PriceSeries& series, const MinVarianceParams& params,
                                         double initial_balance);
BacktestReport run_min_variance(const PriceSeries& series, const MinVarianceParams& params, double initial_balance);

struct IndexSeries {
    std::vector<Date> dates;
    std::vector<double> values;
};

// CSV `date,value`.
IndexSeries load_index_csv(const std::filesystem::path& path);

/// Buy-and-hold index. With an external index the curve is
/// initial_balance * index_t / index_0 on the series dates; otherwise a
/// price-weighted proxy initial_balance * sum(p_t) / sum(p_0).
BacktestReport run_index(const PriceSeries& series, double initial_balance,
                         const std::optional<IndexSeries>& external_index = std::nullopt);

}  // namespace drltrade
