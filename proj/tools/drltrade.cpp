#include "drltrade/config.hpp"
#include "drltrade/error.hpp"
#include "drltrade/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace drltrade;

struct CommonArgs {
    std::string config;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    std::string checkpoint;
    bool dump_config = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "run configuration file (key = value)");
    cmd->add_option("--data", args.data, "price table CSV, overrides 'data'");
    cmd->add_option("--out", args.out, "output directory, overrides 'output_dir'");
    cmd->add_option("--seed", args.seed, "run seed, overrides 'seed'");
    cmd->add_option("--set", args.overrides, "extra override, key=value (repeatable)");
    cmd->add_flag("--dump-config", args.dump_config, "print the effective configuration and exit");
}

RunConfig resolve(const CommonArgs& args) {
    RunConfig cfg = args.config.empty() ? RunConfig{} : load_run_config(args.config);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw config_error("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!args.data.empty()) cfg.data = args.data;
    if (!args.out.empty()) cfg.output_dir = args.out;
    if (args.seed) cfg.seed = *args.seed;
    return cfg;
}

std::filesystem::path checkpoint_path(const CommonArgs& args, const RunConfig& cfg) {
    return args.checkpoint.empty() ? default_checkpoint(cfg) : std::filesystem::path(args.checkpoint);
}

void print_report(const BacktestReport& r) { std::cout << to_json(r).dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stock trading with deep deterministic policy gradients"};
    app.require_subcommand(1);

    CommonArgs train_args, backtest_args, baseline_args, compare_args, synth_args;
    std::vector<std::uint64_t> seeds;

    auto* train = app.add_subcommand("train", "train an agent and write a checkpoint");
    add_common(train, train_args);
    train->add_option("--checkpoint", train_args.checkpoint, "checkpoint path (default <out>/checkpoint.json)");
    train->add_option("--seeds", seeds, "independent runs in parallel, one per seed")->delimiter(',');

    auto* backtest = app.add_subcommand("backtest", "evaluate a checkpoint on the trade period");
    add_common(backtest, backtest_args);
    backtest->add_option("--checkpoint", backtest_args.checkpoint, "checkpoint path (default <out>/checkpoint.json)");

    auto* baseline = app.add_subcommand("baseline", "run the min-variance and index baselines");
    add_common(baseline, baseline_args);

    auto* compare = app.add_subcommand("compare", "agent and both baselines on the same trade period");
    add_common(compare, compare_args);
    compare->add_option("--checkpoint", compare_args.checkpoint, "checkpoint path (default <out>/checkpoint.json)");

    auto* synth = app.add_subcommand("synth", "write a synthetic price table");
    add_common(synth, synth_args);
    std::string kind;
    std::optional<std::size_t> days;
    std::vector<double> p0, drift, vol;
    std::vector<std::string> names;
    std::string start;
    synth->add_option("--kind", kind, "trend or random_walk");
    synth->add_option("--days", days, "number of dates");
    synth->add_option("--p0", p0, "initial prices")->delimiter(',');
    synth->add_option("--drift", drift, "per-day drifts")->delimiter(',');
    synth->add_option("--vol", vol, "per-day log volatilities")->delimiter(',');
    synth->add_option("--names", names, "ticker names")->delimiter(',');
    synth->add_option("--start", start, "first date, YYYY-MM-DD");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorKind::Config);
    }

    try {
        if (*synth) {
            RunConfig cfg = resolve(synth_args);
            auto& s = cfg.synth;
            if (!kind.empty()) set_config_value(cfg, "synth.kind", kind);
            if (!start.empty()) set_config_value(cfg, "synth.start", start);
            if (days) s.days = *days;
            if (!p0.empty()) s.initial_price = p0;
            if (!drift.empty()) s.drift = drift;
            if (!vol.empty()) s.volatility = vol;
            if (!names.empty()) s.names = names;
            if (synth_args.seed) s.seed = *synth_args.seed;
            if (synth_args.dump_config) {
                std::cout << dump_run_config(cfg);
                return 0;
            }
            // --out names the CSV file for this command.
            const std::filesystem::path out =
                synth_args.out.empty() ? cfg.output_dir / "prices.csv" : std::filesystem::path(synth_args.out);
            cmd_synth(s, out);
            std::cerr << "wrote " << out.string() << "\n";
            return 0;
        }

        CommonArgs& args = *train      ? train_args
                           : *backtest ? backtest_args
                           : *baseline ? baseline_args
                                       : compare_args;
        const RunConfig cfg = resolve(args);
        if (args.dump_config) {
            std::cout << dump_run_config(cfg);
            return 0;
        }

        if (*train) {
            if (!seeds.empty()) {
                RunConfig base = cfg;
                if (!base.seed) base.seed = seeds.front();
                base.validate();
                cmd_train_seeds(base, seeds);
                std::cerr << "trained " << seeds.size() << " agents under " << cfg.output_dir.string() << "\n";
                return 0;
            }
            const auto path = checkpoint_path(args, cfg);
            const auto result = cmd_train(cfg, path);
            if (!result.log.episodes.empty()) {
                std::cerr << "episodes: " << result.log.episodes.size()
                          << ", last final value: " << result.log.episodes.back().final_value << "\n";
            }
            std::cerr << "wrote " << path.string() << "\n";
        } else if (*backtest) {
            print_report(cmd_backtest(cfg, checkpoint_path(args, cfg)));
        } else if (*baseline) {
            const auto reports = cmd_baseline(cfg);
            print_report(reports.min_variance);
            print_report(reports.index);
        } else {
            std::cout << cmd_compare(cfg, checkpoint_path(args, cfg)).table();
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::Numeric);
    }
}
