#pragma once

#include "drltrade/baselines.hpp"
#include "drltrade/ddpg.hpp"
#include "drltrade/marketdata.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drltrade {

// How the validation period feeds training.
enum class ValidationMode {
    Continue,  // train on the training period, then keep training on validation
    Union,     // train from scratch on training + validation
    None,      // validation data is not used for training
};

/// Everything one pipeline run needs. Stored as a flat `key = value` text
/// file; `#` starts a comment. Split dates and the seed have no defaults.
struct RunConfig {
    std::filesystem::path data;
    std::vector<std::string> universe;  // empty = every ticker in the file
    std::optional<Date> train_end;
    std::optional<Date> validation_end;
    std::optional<std::uint64_t> seed;
    double initial_balance = 10000.0;
    ValidationMode validation_mode = ValidationMode::Continue;
    std::optional<std::size_t> validation_episodes;  // defaults to ddpg.episodes
    bool online_learning = true;
    std::filesystem::path output_dir = "out";
    std::filesystem::path index_data;  // optional external index CSV
    ddpg::DdpgConfig ddpg;
    MinVarianceParams baseline;
    GeneratorSpec synth;  // keys prefixed "synth."

    /// Checks every component precondition; throws a config error naming the key.
    void validate() const;
    // DdpgConfig with the run seed applied.
    ddpg::DdpgConfig agent_config() const;

    bool operator==(const RunConfig&) const = default;
};

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& cfg);

}  // namespace drltrade
