#include "drltrade/env.hpp"

#include "drltrade/error.hpp"

#include <cmath>
#include <cstdio>

namespace drltrade {

double portfolio_value(const PortfolioState& state) {
    double equity = 0.0;
    for (Eigen::Index d = 0; d < state.prices.size(); ++d) {
        equity += state.prices[d] * static_cast<double>(state.holdings[d]);
    }
    return equity + state.balance;
}

double balance_after(const PortfolioState& state, const TradeAction& action) {
    double cash = state.balance;
    for (Eigen::Index d = 0; d < state.prices.size(); ++d) {
        cash += state.prices[d] * static_cast<double>(action.shares[d]);
    }
    return cash;
}

PortfolioState reset(const PriceSeries& series, double initial_balance) {
    if (!(initial_balance >= 0.0) || !std::isfinite(initial_balance)) {
        throw config_error("initial balance must be finite and non-negative");
    }
    if (series.dates.empty()) throw config_error("cannot reset on an empty series");
    PortfolioState s;
    s.t = 0;
    s.prices = series.prices.row(0).transpose();
    s.holdings = ShareVector::Zero(s.prices.size());
    s.balance = initial_balance;
    return s;
}

TradeAction clip_to_feasible(const PortfolioState& state, const TradeAction& requested) {
    const Eigen::Index n = state.num_stocks();
    TradeAction out = TradeAction::hold(n);

    double cash = state.balance;
    for (Eigen::Index d = 0; d < n; ++d) {
        if (requested.shares[d] > 0) {
            out.shares[d] = std::min(requested.shares[d], state.holdings[d]);
            cash += static_cast<double>(out.shares[d]) * state.prices[d];
        }
    }
    for (Eigen::Index d = 0; d < n; ++d) {
        if (requested.shares[d] >= 0) continue;
        const double price = state.prices[d];
        const double affordable = std::floor(cash / price);
        std::int64_t k = std::min<std::int64_t>(-requested.shares[d],
                                                affordable > 0.0 ? static_cast<std::int64_t>(affordable) : 0);
        while (k > 0 && static_cast<double>(k) * price > cash) --k;
        out.shares[d] = -k;
        cash -= static_cast<double>(k) * price;
    }

    // The running cash and balance_after sum in different orders; trim the last
    // buys if rounding pushed the executed balance below zero.
    for (Eigen::Index d = n - 1; d >= 0 && balance_after(state, out) < 0.0; --d) {
        while (out.shares[d] < 0 && balance_after(state, out) < 0.0) ++out.shares[d];
    }
    return out;
}

StepResult step(const PortfolioState& state, const TradeAction& action, const Eigen::VectorXd& next_prices) {
    const Eigen::Index n = state.num_stocks();
    if (action.shares.size() != n || next_prices.size() != n) throw numeric_error("step: dimension mismatch");
    if (!next_prices.allFinite() || next_prices.minCoeff() <= 0.0) {
        throw numeric_error("step: next prices must be strictly positive");
    }
    StepResult r;
    r.state.t = state.t + 1;
    r.state.holdings = state.holdings - action.shares;
    if (r.state.holdings.minCoeff() < 0) throw numeric_error("step: action sells more shares than held");
    r.state.balance = balance_after(state, action);
    if (r.state.balance < 0.0) throw numeric_error("step: action overdraws the balance");
    r.state.prices = next_prices;
    r.reward = portfolio_value(r.state) - portfolio_value(state);
    return r;
}

ObservationScaler ObservationScaler::identity(Eigen::Index num_stocks) {
    return {Eigen::VectorXd::Ones(num_stocks), 1.0, 1.0};
}

ObservationScaler ObservationScaler::fit(const PriceSeries& train, double max_shares, double initial_balance) {
    if (train.dates.empty()) throw config_error("scaler needs a non-empty training series");
    if (!(max_shares > 0.0)) throw config_error("scaler holding scale must be positive");
    ObservationScaler s;
    s.price_scale = train.prices.row(0).transpose();
    s.holding_scale = max_shares;
    s.balance_scale = initial_balance > 0.0 ? initial_balance : 1.0;
    return s;
}

Eigen::VectorXd observe(const PortfolioState& state, const ObservationScaler& scaler) {
    const Eigen::Index n = state.num_stocks();
    if (scaler.num_stocks() != n) {
        throw config_error("observation scaler expects " + std::to_string(scaler.num_stocks()) + " stocks, state has " +
                           std::to_string(n));
    }
    Eigen::VectorXd obs(2 * n + 1);
    obs.head(n) = state.prices.cwiseQuotient(scaler.price_scale);
    obs.segment(n, n) = state.holdings.cast<double>() / scaler.holding_scale;
    obs[2 * n] = state.balance / scaler.balance_scale;
    return obs;
}

void TradeLog::record(const PriceSeries& series, const PortfolioState& before, const TradeAction& action) {
    const double cash = balance_after(before, action);
    for (Eigen::Index d = 0; d < action.shares.size(); ++d) {
        if (action.shares[d] == 0) continue;
        rows_.push_back({before.t, format_date(series.dates[before.t]), series.tickers[static_cast<std::size_t>(d)],
                         -action.shares[d], before.prices[d], cash});
    }
}

std::string TradeLog::to_csv() const {
    std::string out = "t,date,ticker,shares_delta,price,balance_after\n";
    char buf[128];
    for (const auto& r : rows_) {
        std::snprintf(buf, sizeof(buf), ",%lld,%.17g,%.17g\n", static_cast<long long>(r.shares_delta), r.price,
                      r.balance_after);
        out += std::to_string(r.t) + "," + r.date + "," + r.ticker + buf;
    }
    return out;
}

}  // namespace drltrade
