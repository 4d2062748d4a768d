#pragma once

#include "drltrade/marketdata.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace drltrade {

using ShareVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Integer share counts per stock.
///
/// Sign convention: shares[d] > 0 SELLS shares[d] shares of stock d,
/// shares[d] < 0 BUYS -shares[d] shares, 0 holds. With this convention the
/// cash update is balance + prices.dot(shares).
struct TradeAction {
    ShareVector shares;

    static TradeAction hold(Eigen::Index num_stocks) { return {ShareVector::Zero(num_stocks)}; }
    bool operator==(const TradeAction& o) const { return shares == o.shares; }
};

/// MDP state [p, h, b] at time index t of a PriceSeries.
struct PortfolioState {
    std::size_t t = 0;
    Eigen::VectorXd prices;
    ShareVector holdings;
    double balance = 0.0;

    Eigen::Index num_stocks() const { return prices.size(); }
};

// p^T h + b
double portfolio_value(const PortfolioState& state);

// Balance after executing `action` at the state's prices, b + p^T a.
double balance_after(const PortfolioState& state, const TradeAction& action);

PortfolioState reset(const PriceSeries& series, double initial_balance);

/// Projects a requested trade onto the feasible set. Sells are clamped to the
/// current holdings; buys are then filled in ascending stock index, each reduced
/// to the largest share count the running cash (balance plus all sell proceeds)
/// can pay for. Never throws.
TradeAction clip_to_feasible(const PortfolioState& state, const TradeAction& requested);

struct StepResult {
    PortfolioState state;
    double reward = 0.0;
};

/// Executes a feasible action, then moves prices to next_prices. The reward is
/// the change in portfolio value. Throws on an infeasible action.
StepResult step(const PortfolioState& state, const TradeAction& action, const Eigen::VectorXd& next_prices);

/// Per-feature scaling applied before states reach the networks:
/// [p / price_scale, h / holding_scale, b / balance_scale].
struct ObservationScaler {
    Eigen::VectorXd price_scale;
    double holding_scale = 1.0;
    double balance_scale = 1.0;

    static ObservationScaler identity(Eigen::Index num_stocks);
    // Prices by the first row of the training series, holdings by h_max, balance by b0.
    static ObservationScaler fit(const PriceSeries& train, double max_shares, double initial_balance);

    Eigen::Index num_stocks() const { return price_scale.size(); }
    Eigen::Index observation_size() const { return 2 * price_scale.size() + 1; }
};

// Vector of length 2D + 1.
Eigen::VectorXd observe(const PortfolioState& state, const ObservationScaler& scaler);

/// Audit log of executed trades; CSV `t,date,ticker,shares_delta,price,balance_after`.
/// shares_delta is the holdings change (positive = bought).
class TradeLog {
public:
    void record(const PriceSeries& series, const PortfolioState& before, const TradeAction& action);
    std::string to_csv() const;
    std::size_t size() const { return rows_.size(); }

private:
    struct Row {
        std::size_t t;
        std::string date;
        std::string ticker;
        std::int64_t shares_delta;
        double price;
        double balance_after;
    };
    std::vector<Row> rows_;
};

}  // namespace drltrade
