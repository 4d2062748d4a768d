#pragma once

#include "drltrade/baselines.hpp"
#include "drltrade/config.hpp"
#include "drltrade/ddpg.hpp"
#include "drltrade/metrics.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace drltrade {

struct PreparedData {
    PriceSeries full;
    PeriodSplit split;
    std::size_t dropped_dates = 0;
};

PreparedData prepare_data(const RunConfig& cfg);

// Trains per the config's validation mode.
ddpg::TrainResult train_agent(const RunConfig& cfg, const PreparedData& data);

void save_agent(const std::filesystem::path& path, const ddpg::Agent& agent);
ddpg::Agent load_agent(const std::filesystem::path& path);

std::filesystem::path default_checkpoint(const RunConfig& cfg);

/// Writes <checkpoint> and <output_dir>/training_log.csv.
ddpg::TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& checkpoint);

/// Independent runs, one per seed, in parallel; each writes to <output_dir>/seed_<s>/.
void cmd_train_seeds(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds);

/// Evaluates the checkpoint on the trade period. Writes ddpg_report.json,
/// ddpg_curve.csv and trade_log.csv to the output directory.
BacktestReport cmd_backtest(const RunConfig& cfg, const std::filesystem::path& checkpoint);

struct BaselineReports {
    BacktestReport min_variance;
    BacktestReport index;
};

// Both baselines on the trade period; min-variance draws its lookback from the preceding dates.
BaselineReports run_baselines(const RunConfig& cfg, const PreparedData& data);

/// Writes min_variance_{report.json,curve.csv} and index_{report.json,curve.csv}.
BaselineReports cmd_baseline(const RunConfig& cfg);

struct Comparison {
    std::vector<BacktestReport> reports;  // ddpg, min-variance, index
    nlohmann::json to_json() const;
    std::string table() const;
};

/// All three strategies on the identical trade period and initial balance.
/// Writes comparison.json, comparison.txt and one curve CSV per strategy.
Comparison cmd_compare(const RunConfig& cfg, const std::filesystem::path& checkpoint);

void cmd_synth(const GeneratorSpec& spec, const std::filesystem::path& out);

void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace drltrade
