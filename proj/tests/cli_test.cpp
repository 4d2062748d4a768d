#include "drltrade/config.hpp"
#include "drltrade/pipeline.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace {

using namespace drltrade;
namespace fs = std::filesystem;

int run(const std::string& args) {
    const std::string cmd = std::string(DRLTRADE_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string capture(const std::string& args) {
    const std::string cmd = std::string(DRLTRADE_CLI) + " " + args + " 2>/dev/null";
    std::string out;
    if (FILE* p = popen(cmd.c_str(), "r")) {
        char buf[4096];
        while (std::size_t n = fread(buf, 1, sizeof(buf), p)) out.append(buf, n);
        pclose(p);
    }
    return out;
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        dir = oracle::scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
        // 60 weekdays from 2016-01-04: train to 02-12, validation to 03-04, trade after.
        ASSERT_EQ(run("synth --kind trend --days 60 --p0 100,50 --drift 0.004,0 --names A,B --out " +
                      (dir / "trend.csv").string()),
                  0);
        std::ofstream(dir / "run.conf") << "data = trend.csv\n"
                                           "train_end = 2016-02-12\n"
                                           "validation_end = 2016-03-04\n"
                                           "seed = 5\n"
                                           "episodes = 2\n"
                                           "warmup = 20\n"
                                           "batch_size = 8\n"
                                           "actor_hidden = 8\n"
                                           "critic_hidden = 8\n"
                                           "lookback = 10\n"
                                           "rebalance_every = 5\n";
    }

    std::string conf() const { return "--config " + (dir / "run.conf").string(); }
    std::string out(const std::string& sub) const { return " --out " + (dir / sub).string(); }
};

TEST_F(Cli, SynthCompounding) {
    EXPECT_EQ(run("synth --kind trend --days 3 --p0 100 --drift 0.01 --out " + (dir / "c.csv").string()), 0);
    EXPECT_EQ(oracle::read_file(dir / "c.csv"), "date,S1\n2016-01-04,100\n2016-01-05,101\n2016-01-06,102.01\n");
}

TEST_F(Cli, SynthDeterministicAndLoadable) {
    const std::string args = "synth --kind random_walk --days 40 --p0 10,20 --drift 0,0.001 --vol 0.02,0.01 --seed 8";
    ASSERT_EQ(run(args + " --out " + (dir / "a.csv").string()), 0);
    ASSERT_EQ(run(args + " --out " + (dir / "b.csv").string()), 0);
    EXPECT_EQ(oracle::read_file(dir / "a.csv"), oracle::read_file(dir / "b.csv"));
    EXPECT_EQ(load_price_table(dir / "a.csv").series.num_days(), 40u);
}

TEST_F(Cli, TrainWritesCheckpointAndLog) {
    ASSERT_EQ(run("train " + conf() + " --set episodes=1 --set validation_mode=none" + out("o")), 0);
    EXPECT_TRUE(fs::exists(dir / "o" / "checkpoint.json"));
    std::istringstream log(oracle::read_file(dir / "o" / "training_log.csv"));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(log, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0], "episode,final_value,mean_critic_loss,mean_actor_objective");
}

TEST_F(Cli, TrainIsByteDeterministic) {
    ASSERT_EQ(run("train " + conf() + out("a")), 0);
    ASSERT_EQ(run("train " + conf() + out("b")), 0);
    EXPECT_EQ(oracle::read_file(dir / "a" / "checkpoint.json"), oracle::read_file(dir / "b" / "checkpoint.json"));
    EXPECT_EQ(oracle::read_file(dir / "a" / "training_log.csv"), oracle::read_file(dir / "b" / "training_log.csv"));
    ASSERT_EQ(run("train " + conf() + " --seed 6" + out("c")), 0);
    EXPECT_NE(oracle::read_file(dir / "a" / "checkpoint.json"), oracle::read_file(dir / "c" / "checkpoint.json"));
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run("train " + conf() + " --data " + (dir / "missing.csv").string()), 3);
    EXPECT_EQ(run("train --data " + (dir / "trend.csv").string() + " --seed 1"), 2);
    EXPECT_EQ(run("train " + conf() + " --set nonsense=1"), 2);
    EXPECT_EQ(run("train " + conf() + " --set gamma=2"), 2);
    EXPECT_EQ(run("train --no-such-flag"), 2);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run("backtest " + conf() + " --checkpoint " + (dir / "nope.json").string()), 3);
    std::ofstream(dir / "corrupt.json") << "{\"format\": \"drltrade.agent\", ";
    EXPECT_EQ(run("backtest " + conf() + " --checkpoint " + (dir / "corrupt.json").string()), 3);
}

TEST_F(Cli, BacktestDimensionMismatch) {
    ddpg::DdpgConfig c;
    c.actor_hidden = {4};
    c.critic_hidden = {4};
    save_agent(dir / "three.json", ddpg::make_agent(c, ObservationScaler::identity(3), 1.0));
    EXPECT_EQ(run("backtest " + conf() + " --checkpoint " + (dir / "three.json").string()), 2);
}

TEST_F(Cli, ZeroWeightCheckpointEarnsNothing) {
    ddpg::DdpgConfig c;
    c.actor_hidden = {4};
    c.critic_hidden = {4};
    auto agent = ddpg::make_agent(c, ObservationScaler::identity(2), 1.0);
    nn::for_each_parameter(agent.actor, [](double& p) { p = 0.0; });
    save_agent(dir / "zero.json", agent);
    ASSERT_EQ(run("backtest " + conf() + " --set online_learning=false --checkpoint " + (dir / "zero.json").string() +
                  out("z")),
              0);
    const auto report = nlohmann::json::parse(oracle::read_file(dir / "z" / "ddpg_report.json"));
    EXPECT_EQ(report["annualized_return"].get<double>(), 0.0);
    EXPECT_EQ(report["final_value"].get<double>(), 10000.0);
    EXPECT_EQ(oracle::read_file(dir / "z" / "trade_log.csv"), "t,date,ticker,shares_delta,price,balance_after\n");
}

TEST_F(Cli, OfflineBacktestRepeatable) {
    ASSERT_EQ(run("train " + conf() + out("o")), 0);
    const std::string args = "backtest " + conf() + " --set online_learning=false" + out("o");
    ASSERT_EQ(run(args), 0);
    const auto first = oracle::read_file(dir / "o" / "ddpg_report.json");
    ASSERT_EQ(run(args), 0);
    EXPECT_EQ(first, oracle::read_file(dir / "o" / "ddpg_report.json"));
}

TEST_F(Cli, CompareConstantMarket) {
    std::ofstream csv(dir / "flat.csv");
    csv << "date,A,B\n";
    for (const auto& d : oracle::make_series(std::vector<std::vector<double>>(60, {1.0})).dates)
        csv << format_date(d) << ",12.5,40\n";
    csv.close();
    std::ofstream(dir / "flat.conf") << "data = flat.csv\ntrain_end = 2020-01-20\nvalidation_end = 2020-02-05\n"
                                        "seed = 3\nepisodes = 1\nwarmup = 5\nbatch_size = 4\nlookback = 10\n";
    const std::string args = "--config " + (dir / "flat.conf").string() + out("f");
    ASSERT_EQ(run("train " + args), 0);
    const std::string table = capture("compare " + args);
    const auto j = nlohmann::json::parse(oracle::read_file(dir / "f" / "comparison.json"));
    ASSERT_EQ(j["strategies"].size(), 3u);
    for (const auto& s : j["strategies"]) {
        EXPECT_NEAR(s["annualized_return"].get<double>(), 0.0, 1e-9) << s["strategy"];
        EXPECT_TRUE(s["sharpe"].is_null());
    }

    std::istringstream rows(table);
    std::string line;
    std::vector<std::vector<std::string>> cells;
    while (std::getline(rows, line)) {
        std::istringstream fields(line);
        std::vector<std::string> row;
        for (std::string f; fields >> f;) row.push_back(f);
        cells.push_back(row);
    }
    ASSERT_EQ(cells.size(), 4u);
    for (const auto& row : cells) EXPECT_EQ(row.size(), 6u);
    EXPECT_EQ(cells[1][0], "ddpg");
    EXPECT_EQ(cells[2][0], "min-variance");
    EXPECT_EQ(cells[3][0], "index");
}

TEST_F(Cli, CompareCurvesAligned) {
    ASSERT_EQ(run("train " + conf() + out("o")), 0);
    ASSERT_EQ(run("compare " + conf() + out("o")), 0);
    std::string first_line;
    for (const char* name : {"ddpg_curve.csv", "min_variance_curve.csv", "index_curve.csv"}) {
        std::istringstream csv(oracle::read_file(dir / "o" / name));
        std::string header, line;
        std::getline(csv, header);
        std::getline(csv, line);
        EXPECT_EQ(header, "date,value");
        EXPECT_EQ(line, "2016-03-07,10000") << name;
    }
    const auto first = oracle::read_file(dir / "o" / "comparison.json");
    ASSERT_EQ(run("compare " + conf() + out("o")), 0);
    EXPECT_EQ(first, oracle::read_file(dir / "o" / "comparison.json"));
}

TEST_F(Cli, CompareNeedsHistoryForLookback) {
    ASSERT_EQ(run("train " + conf() + out("o")), 0);
    EXPECT_EQ(run("compare " + conf() + " --set lookback=200" + out("o")), 2);
}

TEST_F(Cli, DumpConfigRoundTrip) {
    const std::string dumped = capture("train " + conf() + " --seed 77 --set gamma=0.5 --dump-config");
    const RunConfig reloaded = parse_run_config(dumped);
    EXPECT_EQ(*reloaded.seed, 77u);
    EXPECT_EQ(reloaded.ddpg.gamma, 0.5);
    EXPECT_EQ(reloaded.ddpg.episodes, 2u);
    EXPECT_EQ(dump_run_config(reloaded), dumped);
}

TEST_F(Cli, FlagsOverrideConfig) {
    const RunConfig c = parse_run_config(capture("baseline " + conf() + " --set seed=1 --seed 9 --dump-config"));
    EXPECT_EQ(*c.seed, 9u);
}

TEST_F(Cli, BaselineWritesReports) {
    ASSERT_EQ(run("baseline " + conf() + out("b")), 0);
    for (const char* f : {"min_variance_report.json", "min_variance_curve.csv", "index_report.json", "index_curve.csv"})
        EXPECT_TRUE(fs::exists(dir / "b" / f)) << f;
}

TEST_F(Cli, ParallelSeeds) {
    ASSERT_EQ(run("train " + conf() + " --seeds 3,4" + out("m")), 0);
    ASSERT_EQ(run("train " + conf() + " --seed 4" + out("single")), 0);
    EXPECT_EQ(oracle::read_file(dir / "m" / "seed_4" / "checkpoint.json"),
              oracle::read_file(dir / "single" / "checkpoint.json"));
    EXPECT_TRUE(fs::exists(dir / "m" / "seed_3" / "checkpoint.json"));
}

}  // namespace
