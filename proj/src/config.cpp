#include "drltrade/config.hpp"

#include "drltrade/error.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace drltrade {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> out;
    while (!v.empty()) {
        const auto comma = v.find(',');
        const auto item = trim(v.substr(0, comma));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
    }
    return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw config_error("config key '" + std::string(key) + "': invalid number '" + std::string(v) + "'");
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("config key '" + std::string(key) + "': expected true/false");
}

std::vector<Eigen::Index> parse_widths(std::string_view key, std::string_view v) {
    std::vector<Eigen::Index> out;
    for (const auto& item : split_list(v)) out.push_back(parse_number<Eigen::Index>(key, item));
    return out;
}

std::vector<double> parse_doubles(std::string_view key, std::string_view v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(parse_number<double>(key, item));
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
    return out;
}

std::string join(const std::vector<Eigen::Index>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + std::to_string(items[i]);
    return out;
}

std::string num(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

std::string join(const std::vector<double>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + num(items[i]);
    return out;
}

const char* mode_name(ValidationMode m) {
    switch (m) {
        case ValidationMode::Continue: return "continue";
        case ValidationMode::Union: return "union";
        case ValidationMode::None: return "none";
    }
    return "continue";
}

}  // namespace

void set_config_value(RunConfig& c, std::string_view key, std::string_view raw) {
    const std::string_view v = trim(raw);
    const auto date = [&] {
        try {
            return parse_date(v);
        } catch (const Error&) {
            throw config_error("config key '" + std::string(key) + "': malformed date '" + std::string(v) + "'");
        }
    };
    auto& d = c.ddpg;
    if (key == "data") c.data = std::string(v);
    else if (key == "universe") c.universe = split_list(v);
    else if (key == "train_end") c.train_end = v.empty() ? std::nullopt : std::optional<Date>(date());
    else if (key == "validation_end") c.validation_end = v.empty() ? std::nullopt : std::optional<Date>(date());
    else if (key == "seed") {
        if (v.empty()) c.seed.reset();
        else c.seed = parse_number<std::uint64_t>(key, v);
    }
    else if (key == "initial_balance") c.initial_balance = parse_number<double>(key, v);
    else if (key == "validation_mode") {
        if (v == "continue") c.validation_mode = ValidationMode::Continue;
        else if (v == "union") c.validation_mode = ValidationMode::Union;
        else if (v == "none") c.validation_mode = ValidationMode::None;
        else throw config_error("config key 'validation_mode': expected continue, union or none");
    } else if (key == "validation_episodes") {
        if (v.empty()) c.validation_episodes.reset();
        else c.validation_episodes = parse_number<std::size_t>(key, v);
    } else if (key == "online_learning") c.online_learning = parse_bool(key, v);
    else if (key == "output_dir") c.output_dir = std::string(v);
    else if (key == "index_data") c.index_data = std::string(v);
    else if (key == "gamma") d.gamma = parse_number<double>(key, v);
    else if (key == "tau") d.tau = parse_number<double>(key, v);
    else if (key == "batch_size") d.batch_size = parse_number<std::size_t>(key, v);
    else if (key == "episodes") d.episodes = parse_number<std::size_t>(key, v);
    else if (key == "buffer_capacity") d.buffer_capacity = parse_number<std::size_t>(key, v);
    else if (key == "actor_lr") d.actor_lr = parse_number<double>(key, v);
    else if (key == "critic_lr") d.critic_lr = parse_number<double>(key, v);
    else if (key == "max_shares") d.max_shares = parse_number<std::int64_t>(key, v);
    else if (key == "warmup") d.warmup = parse_number<std::size_t>(key, v);
    else if (key == "noise_theta") d.noise_theta = parse_number<double>(key, v);
    else if (key == "noise_sigma") d.noise_sigma = parse_number<double>(key, v);
    else if (key == "reward_scale") d.reward_scale = parse_number<double>(key, v);
    else if (key == "actor_output_init") d.actor_output_init = parse_number<double>(key, v);
    else if (key == "actor_hidden") d.actor_hidden = parse_widths(key, v);
    else if (key == "critic_hidden") d.critic_hidden = parse_widths(key, v);
    else if (key == "lookback") c.baseline.lookback = parse_number<Eigen::Index>(key, v);
    else if (key == "rebalance_every") c.baseline.rebalance_every = parse_number<Eigen::Index>(key, v);
    else if (key == "ridge") c.baseline.ridge = parse_number<double>(key, v);
    else if (key == "synth.kind") {
        if (v == "trend") c.synth.kind = GeneratorKind::Trend;
        else if (v == "random_walk") c.synth.kind = GeneratorKind::RandomWalk;
        else throw config_error("config key 'synth.kind': expected trend or random_walk");
    } else if (key == "synth.days") c.synth.days = parse_number<std::size_t>(key, v);
    else if (key == "synth.initial_price") c.synth.initial_price = parse_doubles(key, v);
    else if (key == "synth.drift") c.synth.drift = parse_doubles(key, v);
    else if (key == "synth.volatility") c.synth.volatility = parse_doubles(key, v);
    else if (key == "synth.names") c.synth.names = split_list(v);
    else if (key == "synth.seed") c.synth.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "synth.start") c.synth.start = date();
    else throw config_error("unknown config key '" + std::string(key) + "'");
}

RunConfig parse_run_config(std::string_view text) {
    RunConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw config_error("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    RunConfig cfg = parse_run_config(buf.str());
    // Input paths are relative to the config file.
    const auto base = path.parent_path();
    if (!cfg.data.empty() && cfg.data.is_relative()) cfg.data = base / cfg.data;
    if (!cfg.index_data.empty() && cfg.index_data.is_relative()) cfg.index_data = base / cfg.index_data;
    return cfg;
}

std::string dump_run_config(const RunConfig& c) {
    const auto& d = c.ddpg;
    std::ostringstream out;
    out << "# drltrade run configuration\n";
    out << "data = " << c.data.string() << "\n";
    out << "universe = " << join(c.universe) << "\n";
    out << "train_end = " << (c.train_end ? format_date(*c.train_end) : "") << "\n";
    out << "validation_end = " << (c.validation_end ? format_date(*c.validation_end) : "") << "\n";
    out << "seed = " << (c.seed ? std::to_string(*c.seed) : "") << "\n";
    out << "initial_balance = " << num(c.initial_balance) << "\n";
    out << "validation_mode = " << mode_name(c.validation_mode) << "\n";
    out << "validation_episodes = " << (c.validation_episodes ? std::to_string(*c.validation_episodes) : "") << "\n";
    out << "online_learning = " << (c.online_learning ? "true" : "false") << "\n";
    out << "output_dir = " << c.output_dir.string() << "\n";
    out << "index_data = " << c.index_data.string() << "\n";
    out << "\n# agent\n";
    out << "gamma = " << num(d.gamma) << "\n";
    out << "tau = " << num(d.tau) << "\n";
    out << "batch_size = " << d.batch_size << "\n";
    out << "episodes = " << d.episodes << "\n";
    out << "buffer_capacity = " << d.buffer_capacity << "\n";
    out << "actor_lr = " << num(d.actor_lr) << "\n";
    out << "critic_lr = " << num(d.critic_lr) << "\n";
    out << "max_shares = " << d.max_shares << "\n";
    out << "warmup = " << d.warmup << "\n";
    out << "noise_theta = " << num(d.noise_theta) << "\n";
    out << "noise_sigma = " << num(d.noise_sigma) << "\n";
    out << "reward_scale = " << num(d.reward_scale) << "\n";
    out << "actor_output_init = " << num(d.actor_output_init) << "\n";
    out << "actor_hidden = " << join(d.actor_hidden) << "\n";
    out << "critic_hidden = " << join(d.critic_hidden) << "\n";
    out << "\n# min-variance baseline\n";
    out << "lookback = " << c.baseline.lookback << "\n";
    out << "rebalance_every = " << c.baseline.rebalance_every << "\n";
    out << "ridge = " << num(c.baseline.ridge) << "\n";
    out << "\n# synthetic generator\n";
    out << "synth.kind = " << (c.synth.kind == GeneratorKind::Trend ? "trend" : "random_walk") << "\n";
    out << "synth.days = " << c.synth.days << "\n";
    out << "synth.initial_price = " << join(c.synth.initial_price) << "\n";
    out << "synth.drift = " << join(c.synth.drift) << "\n";
    out << "synth.volatility = " << join(c.synth.volatility) << "\n";
    out << "synth.names = " << join(c.synth.names) << "\n";
    out << "synth.seed = " << c.synth.seed << "\n";
    out << "synth.start = " << format_date(c.synth.start) << "\n";
    return out.str();
}

void RunConfig::validate() const {
    if (data.empty()) throw config_error("config: 'data' is required");
    if (!train_end) throw config_error("config: 'train_end' is required");
    if (!validation_end) throw config_error("config: 'validation_end' is required");
    if (!(*train_end < *validation_end)) throw config_error("config: train_end must precede validation_end");
    if (!seed) throw config_error("config: 'seed' is required");
    if (!(initial_balance > 0.0) || !std::isfinite(initial_balance)) {
        throw config_error("config: initial_balance must be positive");
    }
    agent_config().validate();
    if (baseline.lookback < 2) throw config_error("config: lookback must be at least 2");
    if (baseline.rebalance_every < 1) throw config_error("config: rebalance_every must be at least 1");
    if (!(baseline.ridge >= 0.0)) throw config_error("config: ridge must be non-negative");
}

ddpg::DdpgConfig RunConfig::agent_config() const {
    ddpg::DdpgConfig c = ddpg;
    if (seed) c.seed = *seed;
    return c;
}

}  // namespace drltrade
