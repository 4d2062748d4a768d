#include "drltrade/baselines.hpp"

#include "drltrade/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace drltrade {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& returns, Eigen::Index window) {
    if (window < 2) throw config_error("covariance window must be at least 2");
    if (returns.rows() < window) {
        throw config_error("insufficient history: " + std::to_string(returns.rows()) + " return rows, window " +
                           std::to_string(window));
    }
    const Eigen::MatrixXd block = returns.bottomRows(window);
    const Eigen::RowVectorXd mean = block.colwise().mean();
    const Eigen::MatrixXd centered = block.rowwise() - mean;
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(window - 1);
    return 0.5 * (cov + cov.transpose());
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumsum += u[static_cast<std::size_t>(j)];
        const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

MinVarianceSolution solve_min_variance(const Eigen::MatrixXd& sigma, const MinVarianceOptions& options) {
    const Eigen::Index n = sigma.rows();
    if (n == 0 || sigma.cols() != n) throw config_error("covariance must be a non-empty square matrix");
    if (!sigma.allFinite()) throw numeric_error("covariance has non-finite entries");
    if (!(options.ridge >= 0.0)) throw config_error("ridge must be non-negative");

    const Eigen::MatrixXd a = 0.5 * (sigma + sigma.transpose()) + options.ridge * Eigen::MatrixXd::Identity(n, n);
    // The minimizer is invariant to scaling; normalizing makes the tolerance scale-free.
    const double scale = std::max(a.trace() / static_cast<double>(n), std::numeric_limits<double>::min());
    const Eigen::MatrixXd a_n = a / scale;
    const double lambda_max = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a_n, Eigen::EigenvaluesOnly)
                                  .eigenvalues()
                                  .maxCoeff();
    const double step = 1.0 / (2.0 * std::max(lambda_max, 1e-300));

    MinVarianceSolution sol;
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    double f = w.dot(a_n * w);
    sol.objective_trace.push_back(f * scale);
    for (int it = 0; it < options.max_iterations; ++it) {
        const Eigen::VectorXd next = project_to_simplex(w - step * 2.0 * (a_n * w));
        const double f_next = next.dot(a_n * next);
        const double moved = (next - w).cwiseAbs().maxCoeff();
        const double improvement = f - f_next;
        w = next;
        f = f_next;
        sol.iterations = it + 1;
        sol.objective_trace.push_back(f * scale);
        if (improvement < options.tolerance && moved < 1e-10) break;
    }
    sol.weights = w;
    sol.objective = w.dot(a * w);
    return sol;
}

Eigen::VectorXd min_variance_weights(const Eigen::MatrixXd& sigma, double ridge) {
    MinVarianceOptions options;
    options.ridge = ridge;
    return solve_min_variance(sigma, options).weights;
}

MinVarianceRun run_min_variance_detailed(const PriceSeries& series, const MinVarianceParams& params,
                                         double initial_balance) {
    const auto rows = static_cast<Eigen::Index>(series.num_days());
    if (params.lookback < 2) throw config_error("lookback must be at least 2");
    if (params.rebalance_every < 1) throw config_error("rebalance_every must be at least 1");
    if (rows <= params.lookback + 1) {
        throw config_error("insufficient history: min-variance needs more than lookback + 1 = " +
                           std::to_string(params.lookback + 1) + " dates, got " + std::to_string(rows));
    }
    if (!(initial_balance > 0.0)) throw config_error("initial balance must be positive for min-variance");

    const Eigen::MatrixXd returns = daily_returns(series);
    MinVarianceRun run;
    std::vector<Date> dates;
    std::vector<double> values;
    Eigen::VectorXd positions = Eigen::VectorXd::Zero(series.prices.cols());
    double cash = initial_balance;

    for (Eigen::Index t = params.lookback; t < rows; ++t) {
        const Eigen::VectorXd prices = series.prices.row(t).transpose();
        const double value = cash + positions.dot(prices);
        if ((t - params.lookback) % params.rebalance_every == 0) {
            // Returns rows [t - lookback, t - 1] only use prices up to row t.
            const Eigen::MatrixXd cov = sample_covariance(returns.topRows(t), params.lookback);
            RebalanceEvent ev;
            ev.t = static_cast<std::size_t>(t);
            ev.value_before = value;
            ev.weights = min_variance_weights(cov, params.ridge);
            positions = (ev.weights * value).cwiseQuotient(prices);
            cash = 0.0;
            ev.value_after = positions.dot(prices);
            run.rebalances.push_back(ev);
            values.push_back(ev.value_after);
        } else {
            values.push_back(value);
        }
        dates.push_back(series.dates[static_cast<std::size_t>(t)]);
    }
    // The curve starts at exactly the initial balance.
    values.front() = initial_balance;
    run.report = build_report("min-variance", std::move(dates), std::move(values));
    return run;
}

BacktestReport run_min_variance(const PriceSeries& series, const MinVarianceParams& params, double initial_balance) {
    return run_min_variance_detailed(series, params, initial_balance).report;
}

IndexSeries load_index_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open index file " + path.string());
    IndexSeries out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line.rfind("date", 0) != 0) throw io_error("index CSV header must be 'date,value'");
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw io_error("index CSV line " + std::to_string(line_no) + ": missing value");
        const Date d = parse_date(line.substr(0, comma));
        double v = 0.0;
        const std::string cell = line.substr(comma + 1);
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc{} || ptr != cell.data() + cell.size() || !(v > 0.0) || !std::isfinite(v)) {
            throw io_error("index CSV line " + std::to_string(line_no) + ": invalid value");
        }
        if (!out.dates.empty() && !(out.dates.back() < d)) throw io_error("index CSV dates must increase");
        out.dates.push_back(d);
        out.values.push_back(v);
    }
    if (out.dates.empty()) throw io_error("index CSV is empty");
    return out;
}

BacktestReport run_index(const PriceSeries& series, double initial_balance, const std::optional<IndexSeries>& external) {
    if (series.dates.empty()) throw config_error("index baseline needs a non-empty series");
    std::vector<double> values;
    values.reserve(series.num_days());
    if (external) {
        std::map<Date, double> lookup;
        for (std::size_t i = 0; i < external->dates.size(); ++i) lookup[external->dates[i]] = external->values.at(i);
        std::vector<double> levels;
        for (const auto& d : series.dates) {
            const auto it = lookup.find(d);
            if (it == lookup.end()) throw config_error("external index has no value for " + format_date(d));
            levels.push_back(it->second);
        }
        for (double level : levels) values.push_back(initial_balance * level / levels.front());
    } else {
        const Eigen::VectorXd level = series.prices.rowwise().sum();
        for (Eigen::Index t = 0; t < level.size(); ++t) values.push_back(initial_balance * level[t] / level[0]);
    }
    values.front() = initial_balance;
    return build_report("index", series.dates, std::move(values));
}

}  // namespace drltrade
