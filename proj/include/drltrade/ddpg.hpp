#pragma once

#include "drltrade/env.hpp"
#include "drltrade/marketdata.hpp"
#include "drltrade/metrics.hpp"
#include "drltrade/nn.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace drltrade::ddpg {

using Rng = std::mt19937_64;

/// Derives an independent seed for a named randomness stream. Every random
/// draw in a run descends from the single configured seed through this.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

namespace streams {
inline constexpr std::uint64_t kActorInit = 1;
inline constexpr std::uint64_t kCriticInit = 2;
inline constexpr std::uint64_t kReplay = 3;
inline constexpr std::uint64_t kNoise = 4;  // further split by episode number
inline constexpr std::uint64_t kOnlineReplay = 5;
inline constexpr std::uint64_t kActorOutputInit = 6;
}  // namespace streams

struct Transition {
    Eigen::VectorXd state;       // scaled observation of s_t
    Eigen::VectorXd action;      // continuous action in [-1, 1]^D, before rounding and clipping
    double reward = 0.0;         // currency
    Eigen::VectorXd next_state;  // scaled observation of s_{t+1}
    bool terminal = false;
};

/// Fixed-capacity ring of transitions; the oldest entry is overwritten once full.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition tr);

    // Uniform with replacement.
    std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
    std::vector<Transition> sample(std::size_t n, Rng& rng) const;

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }
    // i-th stored entry, oldest first.
    const Transition& operator[](std::size_t i) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> storage_;
};

/// Discrete Ornstein-Uhlenbeck process x <- x + theta * (mu - x) + sigma * N(0, 1).
class OuNoise {
public:
    OuNoise(Eigen::Index size, double theta, double sigma, std::uint64_t seed, double mu = 0.0);

    Eigen::VectorXd step();
    // Restarts the process at `x0` (mu by default) with a new seed.
    void reset(std::uint64_t seed);
    void reset(std::uint64_t seed, const Eigen::VectorXd& x0);

    const Eigen::VectorXd& value() const { return x_; }

private:
    double theta_;
    double sigma_;
    double mu_;
    Eigen::VectorXd x_;
    Rng rng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

struct DdpgConfig {
    double gamma = 0.99;
    double tau = 0.001;
    std::size_t batch_size = 64;
    std::size_t episodes = 30;
    std::size_t buffer_capacity = 100000;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    std::int64_t max_shares = 100;
    std::size_t warmup = 1000;
    std::uint64_t seed = 0;
    double noise_theta = 0.15;
    double noise_sigma = 0.2;
    // Rewards are multiplied by this before entering the critic loss; 0 selects
    // 100 / initial_balance, i.e. rewards in percent of the starting capital.
    double reward_scale = 0.0;
    // Actor output-layer weights are redrawn uniform in +-this so initial
    // actions start near zero; 0 keeps the Glorot draw.
    double actor_output_init = 3e-3;
    std::vector<Eigen::Index> actor_hidden{64, 32};
    std::vector<Eigen::Index> critic_hidden{64, 32};

    void validate() const;
    bool operator==(const DdpgConfig&) const = default;
};

nlohmann::json to_json(const DdpgConfig& cfg);
DdpgConfig config_from_json(const nlohmann::json& j);

struct Agent {
    nn::Mlpd actor;
    nn::Mlpd critic;
    nn::Mlpd target_actor;
    nn::Mlpd target_critic;
    nn::OptimizerState<double> actor_opt;
    nn::OptimizerState<double> critic_opt;
    DdpgConfig config;
    ObservationScaler scaler;
    double reward_scale = 1.0;

    Eigen::Index num_stocks() const { return actor.output_size(); }
    Eigen::Index observation_size() const { return actor.input_size(); }
};

/// Actor [obs, hidden..., D] (relu, tanh output) and critic [obs + D, hidden..., 1]
/// (relu, identity output). Targets start as exact copies.
Agent make_agent(const DdpgConfig& cfg, const ObservationScaler& scaler, double reward_scale);

/// Actor output plus an optional noise sample, clamped to [-1, 1].
Eigen::VectorXd select_action(const Agent& agent, const Eigen::VectorXd& obs, OuNoise* noise = nullptr);

/// a[d] = round(-continuous[d] * max_shares), half away from zero. Positive
/// continuous values buy, stored as negative share counts (positive = sell).
TradeAction map_action(const Eigen::VectorXd& continuous, std::int64_t max_shares);

// Stacked minibatch in column layout.
struct Batch {
    Eigen::MatrixXd states;
    Eigen::MatrixXd actions;
    Eigen::VectorXd rewards;
    Eigen::MatrixXd next_states;
    Eigen::Array<bool, Eigen::Dynamic, 1> terminal;
};

Batch stack(std::span<const Transition> transitions);

/// y_i = s * r_i + gamma * Q'(s'_i, mu'(s'_i)), or s * r_i at terminal
/// transitions, with s the agent's reward scale.
Eigen::VectorXd critic_targets(const Agent& agent, const Batch& batch);

// Mean squared TD error with frozen targets.
double critic_loss(const nn::Mlpd& critic, const Batch& batch, const Eigen::VectorXd& targets);

struct CriticGradient {
    double loss = 0.0;
    nn::GradientSet<double> grads;
};
CriticGradient critic_loss_gradient(const Agent& agent, const Batch& batch, const Eigen::VectorXd& targets);

// J = mean_i Q(s_i, mu(s_i)).
double actor_objective(const nn::Mlpd& actor, const nn::Mlpd& critic, const Batch& batch);

struct ActorGradient {
    double objective = 0.0;
    nn::GradientSet<double> grads;  // dJ/d(actor parameters)
};
ActorGradient actor_objective_gradient(const Agent& agent, const Batch& batch);

/// One optimizer step on the critic loss. Returns the loss before the step.
double critic_update(Agent& agent, std::span<const Transition> batch);

/// One ascent step on J through the critic's action input. Returns J before the step.
double actor_update(Agent& agent, std::span<const Transition> batch);

void update_targets(Agent& agent);

struct EpisodeLog {
    std::size_t episode = 0;
    double final_value = 0.0;
    std::size_t updates = 0;
    double mean_critic_loss = 0.0;
    double mean_actor_objective = 0.0;
};

struct TrainingLog {
    std::vector<EpisodeLog> episodes;
    std::string to_csv() const;  // episode,final_value,mean_critic_loss,mean_actor_objective
};

/// Learner state that persists across episodes.
struct TrainingSession {
    explicit TrainingSession(std::size_t capacity, std::uint64_t replay_seed) : buffer(capacity), replay_rng(replay_seed) {}

    ReplayBuffer buffer;
    Rng replay_rng;
    std::size_t total_steps = 0;
    std::size_t episodes_run = 0;
    std::size_t warmup = 0;
};

struct EpisodeOptions {
    bool explore = true;
    bool learn = true;
    TradeLog* trade_log = nullptr;
};

struct EpisodeResult {
    std::vector<double> values;  // portfolio value at each date of the series
    std::vector<double> rewards;
    EpisodeLog log;
};

/// Rolls one episode over the series. With learning on, each step stores the
/// transition and, once warmup and batch size are reached, performs one critic
/// update, one actor update and one soft update of both targets.
EpisodeResult run_episode(Agent& agent, TrainingSession& session, const PriceSeries& series, double initial_balance,
                          const EpisodeOptions& options);

struct TrainResult {
    Agent agent;
    TrainingLog log;
};

/// Fresh agent trained for cfg.episodes episodes on the series.
TrainResult train(const PriceSeries& series, const DdpgConfig& cfg, double initial_balance);

// Continues training an existing agent and session on another series.
void continue_training(Agent& agent, TrainingSession& session, const PriceSeries& series, double initial_balance,
                       std::size_t episodes, TrainingLog& log);

TrainingSession make_session(const Agent& agent);

/// Runs the deterministic policy (no exploration) over the series. With
/// online_learning the agent keeps training as it trades, from a fresh replay
/// buffer; updates start once the buffer holds one minibatch.
BacktestReport evaluate(Agent& agent, const PriceSeries& series, double initial_balance, bool online_learning,
                        TradeLog* trade_log = nullptr);

// Versioned container with the four networks, optimizer states, config and scaler.
nlohmann::json to_json(const Agent& agent);
Agent agent_from_json(const nlohmann::json& j);

}  // namespace drltrade::ddpg
