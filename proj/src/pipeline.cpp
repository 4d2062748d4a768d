#include "drltrade/pipeline.hpp"

#include "drltrade/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace drltrade {

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << content;
    if (!out) throw io_error("write failed for " + path.string());
}

PreparedData prepare_data(const RunConfig& cfg) {
    cfg.validate();
    std::optional<std::vector<std::string>> universe;
    if (!cfg.universe.empty()) universe = cfg.universe;
    auto loaded = load_price_table(cfg.data, universe);
    PreparedData out;
    out.dropped_dates = loaded.dropped_dates;
    out.split = split_periods(loaded.series, *cfg.train_end, *cfg.validation_end);
    out.full = std::move(loaded.series);
    return out;
}

ddpg::TrainResult train_agent(const RunConfig& cfg, const PreparedData& data) {
    const ddpg::DdpgConfig agent_cfg = cfg.agent_config();
    switch (cfg.validation_mode) {
        case ValidationMode::None: return ddpg::train(data.split.train, agent_cfg, cfg.initial_balance);
        case ValidationMode::Union:
            return ddpg::train(concat(data.split.train, data.split.validation), agent_cfg, cfg.initial_balance);
        case ValidationMode::Continue: break;
    }
    const double reward_scale = agent_cfg.reward_scale > 0.0 ? agent_cfg.reward_scale
                                : (cfg.initial_balance > 0.0 ? 100.0 / cfg.initial_balance : 1.0);
    ddpg::TrainResult result{
        ddpg::make_agent(agent_cfg,
                         ObservationScaler::fit(data.split.train, static_cast<double>(agent_cfg.max_shares),
                                                cfg.initial_balance),
                         reward_scale),
        {}};
    ddpg::TrainingSession session = ddpg::make_session(result.agent);
    ddpg::continue_training(result.agent, session, data.split.train, cfg.initial_balance, agent_cfg.episodes,
                            result.log);
    ddpg::continue_training(result.agent, session, data.split.validation, cfg.initial_balance,
                            cfg.validation_episodes.value_or(agent_cfg.episodes), result.log);
    return result;
}

void save_agent(const std::filesystem::path& path, const ddpg::Agent& agent) {
    write_text(path, ddpg::to_json(agent).dump(1) + "\n");
}

ddpg::Agent load_agent(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw io_error("corrupt checkpoint " + path.string() + ": " + e.what());
    }
    return ddpg::agent_from_json(j);
}

std::filesystem::path default_checkpoint(const RunConfig& cfg) { return cfg.output_dir / "checkpoint.json"; }

ddpg::TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& checkpoint) {
    const PreparedData data = prepare_data(cfg);
    ddpg::TrainResult result = train_agent(cfg, data);
    save_agent(checkpoint, result.agent);
    write_text(cfg.output_dir / "training_log.csv", result.log.to_csv());
    return result;
}

void cmd_train_seeds(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds) {
    std::vector<std::exception_ptr> errors(seeds.size());
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        workers.emplace_back([&, i] {
            try {
                RunConfig run = cfg;
                run.seed = seeds[i];
                run.output_dir = cfg.output_dir / ("seed_" + std::to_string(seeds[i]));
                cmd_train(run, default_checkpoint(run));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace {

void check_agent_matches(const ddpg::Agent& agent, const PriceSeries& series) {
    if (agent.num_stocks() != static_cast<Eigen::Index>(series.num_tickers())) {
        throw config_error("checkpoint trades " + std::to_string(agent.num_stocks()) + " stocks, data has " +
                           std::to_string(series.num_tickers()));
    }
}

void write_report(const std::filesystem::path& dir, const std::string& stem, const BacktestReport& report) {
    write_text(dir / (stem + "_report.json"), to_json(report).dump(2) + "\n");
    write_text(dir / (stem + "_curve.csv"), curve_csv(report));
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace

BacktestReport cmd_backtest(const RunConfig& cfg, const std::filesystem::path& checkpoint) {
    const PreparedData data = prepare_data(cfg);
    ddpg::Agent agent = load_agent(checkpoint);
    check_agent_matches(agent, data.split.trade);
    TradeLog trades;
    BacktestReport report = ddpg::evaluate(agent, data.split.trade, cfg.initial_balance, cfg.online_learning, &trades);
    write_report(cfg.output_dir, "ddpg", report);
    write_text(cfg.output_dir / "trade_log.csv", trades.to_csv());
    return report;
}

BaselineReports run_baselines(const RunConfig& cfg, const PreparedData& data) {
    const std::size_t trade_start = data.split.train.num_days() + data.split.validation.num_days();
    const auto lookback = static_cast<std::size_t>(cfg.baseline.lookback);
    if (trade_start < lookback) {
        throw config_error("insufficient history: min-variance lookback " + std::to_string(lookback) +
                           " exceeds the " + std::to_string(trade_start) + " dates before the trade period");
    }
    const PriceSeries history_and_trade =
        data.full.slice(trade_start - lookback, lookback + data.split.trade.num_days());
    BaselineReports out{run_min_variance(history_and_trade, cfg.baseline, cfg.initial_balance),
                        BacktestReport{}};
    std::optional<IndexSeries> external;
    if (!cfg.index_data.empty()) external = load_index_csv(cfg.index_data);
    out.index = run_index(data.split.trade, cfg.initial_balance, external);
    return out;
}

BaselineReports cmd_baseline(const RunConfig& cfg) {
    const PreparedData data = prepare_data(cfg);
    BaselineReports reports = run_baselines(cfg, data);
    write_report(cfg.output_dir, "min_variance", reports.min_variance);
    write_report(cfg.output_dir, "index", reports.index);
    return reports;
}

nlohmann::json Comparison::to_json() const {
    nlohmann::json j;
    j["initial_value"] = reports.empty() ? 0.0 : reports.front().initial_value;
    j["start_date"] = reports.empty() ? "" : format_date(reports.front().dates.front());
    j["end_date"] = reports.empty() ? "" : format_date(reports.front().dates.back());
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : reports) rows.push_back(drltrade::to_json(r));
    j["strategies"] = std::move(rows);
    return j;
}

std::string Comparison::table() const {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %16s %16s %12s %12s %8s\n", "strategy", "initial_value", "final_value",
                  "ann_return", "ann_std", "sharpe");
    out << line;
    for (const auto& r : reports) {
        const std::string sharpe = r.sharpe ? fmt("%.2f", *r.sharpe) : "n/a";
        std::snprintf(line, sizeof(line), "%-14s %16s %16s %11s%% %11s%% %8s\n", r.strategy.c_str(),
                      fmt("%.2f", r.initial_value).c_str(), fmt("%.2f", r.final_value).c_str(),
                      fmt("%.2f", 100.0 * r.annualized_return).c_str(), fmt("%.2f", 100.0 * r.annualized_std).c_str(),
                      sharpe.c_str());
        out << line;
    }
    return out.str();
}

Comparison cmd_compare(const RunConfig& cfg, const std::filesystem::path& checkpoint) {
    const PreparedData data = prepare_data(cfg);
    ddpg::Agent agent = load_agent(checkpoint);
    check_agent_matches(agent, data.split.trade);
    Comparison cmp;
    cmp.reports.push_back(ddpg::evaluate(agent, data.split.trade, cfg.initial_balance, cfg.online_learning));
    BaselineReports baselines = run_baselines(cfg, data);
    cmp.reports.push_back(std::move(baselines.min_variance));
    cmp.reports.push_back(std::move(baselines.index));

    write_text(cfg.output_dir / "comparison.json", cmp.to_json().dump(2) + "\n");
    write_text(cfg.output_dir / "comparison.txt", cmp.table());
    write_text(cfg.output_dir / "ddpg_curve.csv", curve_csv(cmp.reports[0]));
    write_text(cfg.output_dir / "min_variance_curve.csv", curve_csv(cmp.reports[1]));
    write_text(cfg.output_dir / "index_curve.csv", curve_csv(cmp.reports[2]));
    return cmp;
}

void cmd_synth(const GeneratorSpec& spec, const std::filesystem::path& out) {
    write_text(out, to_wide_csv(synthetic_series(spec)));
}

}  // namespace drltrade
