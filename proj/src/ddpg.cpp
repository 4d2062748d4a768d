#include "drltrade/ddpg.hpp"

#include "drltrade/error.hpp"
#include "drltrade/nn_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace drltrade::ddpg {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// ---------------------------------------------------------------- replay

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw config_error("replay buffer capacity must be positive");
    storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition tr) {
    if (!storage_.empty()) {
        const auto& ref = storage_.front();
        if (tr.state.size() != ref.state.size() || tr.next_state.size() != ref.next_state.size() ||
            tr.action.size() != ref.action.size()) {
            throw config_error("replay buffer: transition shape differs from stored transitions");
        }
    }
    if (tr.state.size() != tr.next_state.size()) throw config_error("replay buffer: observation lengths differ");
    if (!std::isfinite(tr.reward)) throw numeric_error("replay buffer: non-finite reward");

    if (storage_.size() < capacity_) {
        storage_.push_back(std::move(tr));
    } else {
        storage_[next_] = std::move(tr);
    }
    next_ = (next_ + 1) % capacity_;
}

const Transition& ReplayBuffer::operator[](std::size_t i) const {
    if (i >= storage_.size()) throw config_error("replay buffer index out of range");
    if (storage_.size() < capacity_) return storage_[i];
    return storage_[(next_ + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
    if (n == 0) throw config_error("replay buffer: sample size must be positive");
    if (n > storage_.size()) {
        throw config_error("replay buffer: cannot sample " + std::to_string(n) + " from " +
                           std::to_string(storage_.size()) + " transitions");
    }
    std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    std::vector<Transition> out;
    out.reserve(n);
    for (std::size_t i : sample_indices(n, rng)) out.push_back(storage_[i]);
    return out;
}

// ---------------------------------------------------------------- noise

OuNoise::OuNoise(Eigen::Index size, double theta, double sigma, std::uint64_t seed, double mu)
    : theta_(theta), sigma_(sigma), mu_(mu), x_(Eigen::VectorXd::Constant(size, mu)), rng_(seed) {
    if (!(sigma >= 0.0) || !std::isfinite(theta)) throw config_error("noise: invalid theta/sigma");
}

Eigen::VectorXd OuNoise::step() {
    for (Eigen::Index i = 0; i < x_.size(); ++i) x_[i] += theta_ * (mu_ - x_[i]) + sigma_ * gauss_(rng_);
    return x_;
}

void OuNoise::reset(std::uint64_t seed) { reset(seed, Eigen::VectorXd::Constant(x_.size(), mu_)); }

void OuNoise::reset(std::uint64_t seed, const Eigen::VectorXd& x0) {
    if (x0.size() != x_.size()) throw config_error("noise: initial state dimension mismatch");
    x_ = x0;
    rng_.seed(seed);
    gauss_.reset();
}

// ---------------------------------------------------------------- config

void DdpgConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw config_error("gamma must lie in [0, 1]");
    if (!(tau > 0.0 && tau <= 1.0)) throw config_error("tau must lie in (0, 1]");
    if (batch_size < 1) throw config_error("batch_size must be at least 1");
    if (buffer_capacity < batch_size) throw config_error("buffer_capacity must hold at least one batch");
    if (max_shares < 1) throw config_error("max_shares must be at least 1");
    if (!(actor_lr >= 0.0) || !(critic_lr >= 0.0)) throw config_error("learning rates must be non-negative");
    if (!(noise_sigma >= 0.0) || !(noise_theta >= 0.0)) throw config_error("noise parameters must be non-negative");
    if (!(reward_scale >= 0.0) || !std::isfinite(reward_scale)) throw config_error("reward_scale must be >= 0");
    if (!(actor_output_init >= 0.0)) throw config_error("actor_output_init must be >= 0");
    for (auto w : actor_hidden)
        if (w < 1) throw config_error("actor hidden widths must be positive");
    for (auto w : critic_hidden)
        if (w < 1) throw config_error("critic hidden widths must be positive");
}

nlohmann::json to_json(const DdpgConfig& c) {
    return {{"gamma", c.gamma},
            {"tau", c.tau},
            {"batch_size", c.batch_size},
            {"episodes", c.episodes},
            {"buffer_capacity", c.buffer_capacity},
            {"actor_lr", c.actor_lr},
            {"critic_lr", c.critic_lr},
            {"max_shares", c.max_shares},
            {"warmup", c.warmup},
            {"seed", c.seed},
            {"noise_theta", c.noise_theta},
            {"noise_sigma", c.noise_sigma},
            {"reward_scale", c.reward_scale},
            {"actor_output_init", c.actor_output_init},
            {"actor_hidden", c.actor_hidden},
            {"critic_hidden", c.critic_hidden}};
}

DdpgConfig config_from_json(const nlohmann::json& j) {
    DdpgConfig c;
    c.gamma = j.at("gamma").get<double>();
    c.tau = j.at("tau").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.episodes = j.at("episodes").get<std::size_t>();
    c.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
    c.actor_lr = j.at("actor_lr").get<double>();
    c.critic_lr = j.at("critic_lr").get<double>();
    c.max_shares = j.at("max_shares").get<std::int64_t>();
    c.warmup = j.at("warmup").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.noise_theta = j.at("noise_theta").get<double>();
    c.noise_sigma = j.at("noise_sigma").get<double>();
    c.reward_scale = j.at("reward_scale").get<double>();
    c.actor_output_init = j.at("actor_output_init").get<double>();
    c.actor_hidden = j.at("actor_hidden").get<std::vector<Eigen::Index>>();
    c.critic_hidden = j.at("critic_hidden").get<std::vector<Eigen::Index>>();
    return c;
}

// ---------------------------------------------------------------- agent

Agent make_agent(const DdpgConfig& cfg, const ObservationScaler& scaler, double reward_scale) {
    cfg.validate();
    const Eigen::Index d = scaler.num_stocks();
    const Eigen::Index obs = scaler.observation_size();
    if (d < 1) throw config_error("agent needs at least one stock");

    std::vector<Eigen::Index> actor_sizes{obs};
    actor_sizes.insert(actor_sizes.end(), cfg.actor_hidden.begin(), cfg.actor_hidden.end());
    actor_sizes.push_back(d);
    std::vector<Eigen::Index> critic_sizes{obs + d};
    critic_sizes.insert(critic_sizes.end(), cfg.critic_hidden.begin(), cfg.critic_hidden.end());
    critic_sizes.push_back(1);

    Agent a;
    a.actor = nn::init<double>(actor_sizes, nn::Activation::Relu, nn::Activation::Tanh,
                               derive_seed(cfg.seed, streams::kActorInit));
    a.critic = nn::init<double>(critic_sizes, nn::Activation::Relu, nn::Activation::Identity,
                                derive_seed(cfg.seed, streams::kCriticInit));
    if (cfg.actor_output_init > 0.0) {
        std::mt19937_64 rng(derive_seed(cfg.seed, streams::kActorOutputInit));
        std::uniform_real_distribution<double> dist(-cfg.actor_output_init, cfg.actor_output_init);
        auto& w = a.actor.weights.back();
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    }
    a.target_actor = a.actor;
    a.target_critic = a.critic;
    a.actor_opt = nn::make_optimizer(a.actor, cfg.actor_lr);
    a.critic_opt = nn::make_optimizer(a.critic, cfg.critic_lr);
    a.config = cfg;
    a.scaler = scaler;
    a.reward_scale = reward_scale;
    return a;
}

Eigen::VectorXd select_action(const Agent& agent, const Eigen::VectorXd& obs, OuNoise* noise) {
    if (obs.size() != agent.observation_size()) {
        throw config_error("select_action: observation has " + std::to_string(obs.size()) + " entries, actor expects " +
                           std::to_string(agent.observation_size()));
    }
    Eigen::VectorXd a = nn::predict(agent.actor, obs);
    if (noise != nullptr) a += noise->step();
    return a.cwiseMax(-1.0).cwiseMin(1.0);
}

TradeAction map_action(const Eigen::VectorXd& continuous, std::int64_t max_shares) {
    TradeAction out = TradeAction::hold(continuous.size());
    for (Eigen::Index d = 0; d < continuous.size(); ++d) {
        const double c = std::clamp(continuous[d], -1.0, 1.0);
        out.shares[d] = static_cast<std::int64_t>(std::round(-c * static_cast<double>(max_shares)));
    }
    return out;
}

Batch stack(std::span<const Transition> transitions) {
    if (transitions.empty()) throw config_error("empty minibatch");
    const auto n = static_cast<Eigen::Index>(transitions.size());
    const Eigen::Index obs = transitions.front().state.size();
    const Eigen::Index act = transitions.front().action.size();
    Batch b;
    b.states.resize(obs, n);
    b.actions.resize(act, n);
    b.rewards.resize(n);
    b.next_states.resize(obs, n);
    b.terminal.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& tr = transitions[static_cast<std::size_t>(i)];
        b.states.col(i) = tr.state;
        b.actions.col(i) = tr.action;
        b.rewards[i] = tr.reward;
        b.next_states.col(i) = tr.next_state;
        b.terminal[i] = tr.terminal;
    }
    return b;
}

namespace {

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
    Eigen::MatrixXd x(states.rows() + actions.rows(), states.cols());
    x << states, actions;
    return x;
}

void check_batch(const Agent& agent, const Batch& batch) {
    if (batch.states.rows() != agent.observation_size() || batch.actions.rows() != agent.num_stocks()) {
        throw config_error("minibatch dimensions do not match the agent");
    }
}

}  // namespace

Eigen::VectorXd critic_targets(const Agent& agent, const Batch& batch) {
    check_batch(agent, batch);
    const Eigen::MatrixXd next_actions = nn::predict(agent.target_actor, batch.next_states);
    const Eigen::VectorXd next_q =
        nn::predict(agent.target_critic, critic_input(batch.next_states, next_actions)).row(0).transpose();
    const double gamma = agent.config.gamma;
    Eigen::VectorXd y(batch.rewards.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y[i] = agent.reward_scale * batch.rewards[i] + (batch.terminal[i] ? 0.0 : gamma * next_q[i]);
    }
    return y;
}

double critic_loss(const nn::Mlpd& critic, const Batch& batch, const Eigen::VectorXd& targets) {
    const Eigen::VectorXd q = nn::predict(critic, critic_input(batch.states, batch.actions)).row(0).transpose();
    return (targets - q).squaredNorm() / static_cast<double>(q.size());
}

CriticGradient critic_loss_gradient(const Agent& agent, const Batch& batch, const Eigen::VectorXd& targets) {
    check_batch(agent, batch);
    const auto fwd = nn::forward(agent.critic, critic_input(batch.states, batch.actions));
    const Eigen::RowVectorXd diff = fwd.output.row(0) - targets.transpose();
    const double n = static_cast<double>(diff.size());
    CriticGradient out;
    out.loss = diff.squaredNorm() / n;
    const Eigen::MatrixXd output_grad = (2.0 / n) * diff;
    out.grads = nn::backward(agent.critic, fwd.tape, output_grad);
    return out;
}

double actor_objective(const nn::Mlpd& actor, const nn::Mlpd& critic, const Batch& batch) {
    const Eigen::MatrixXd actions = nn::predict(actor, batch.states);
    return nn::predict(critic, critic_input(batch.states, actions)).mean();
}

ActorGradient actor_objective_gradient(const Agent& agent, const Batch& batch) {
    check_batch(agent, batch);
    const auto actor_fwd = nn::forward(agent.actor, batch.states);
    const auto critic_fwd = nn::forward(agent.critic, critic_input(batch.states, actor_fwd.output));
    const Eigen::Index n = batch.states.cols();
    ActorGradient out;
    out.objective = critic_fwd.output.mean();
    const Eigen::MatrixXd mean_grad = Eigen::MatrixXd::Constant(1, n, 1.0 / static_cast<double>(n));
    const auto critic_grads = nn::backward(agent.critic, critic_fwd.tape, mean_grad);
    // dJ/da: the action rows of the critic's input gradient.
    const Eigen::MatrixXd action_grad = critic_grads.input.bottomRows(agent.num_stocks());
    out.grads = nn::backward(agent.actor, actor_fwd.tape, action_grad);
    return out;
}

double critic_update(Agent& agent, std::span<const Transition> transitions) {
    const Batch batch = stack(transitions);
    const Eigen::VectorXd y = critic_targets(agent, batch);
    auto cg = critic_loss_gradient(agent, batch, y);
    if (!std::isfinite(cg.loss)) throw numeric_error("critic loss is not finite");
    nn::optimizer_step(agent.critic, cg.grads, agent.critic_opt);
    return cg.loss;
}

double actor_update(Agent& agent, std::span<const Transition> transitions) {
    const Batch batch = stack(transitions);
    auto ag = actor_objective_gradient(agent, batch);
    if (!std::isfinite(ag.objective) || !ag.grads.all_finite()) throw numeric_error("actor gradient is not finite");
    ag.grads *= -1.0;  // ascend J
    nn::optimizer_step(agent.actor, ag.grads, agent.actor_opt);
    return ag.objective;
}

void update_targets(Agent& agent) {
    nn::soft_update(agent.target_critic, agent.critic, agent.config.tau);
    nn::soft_update(agent.target_actor, agent.actor, agent.config.tau);
}

std::string TrainingLog::to_csv() const {
    std::string out = "episode,final_value,mean_critic_loss,mean_actor_objective\n";
    char buf[160];
    for (const auto& e : episodes) {
        if (e.updates > 0) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", e.episode, e.final_value, e.mean_critic_loss,
                          e.mean_actor_objective);
        } else {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,,\n", e.episode, e.final_value);
        }
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------- loops

TrainingSession make_session(const Agent& agent) {
    TrainingSession s(agent.config.buffer_capacity, derive_seed(agent.config.seed, streams::kReplay));
    s.warmup = agent.config.warmup;
    return s;
}

EpisodeResult run_episode(Agent& agent, TrainingSession& session, const PriceSeries& series, double initial_balance,
                          const EpisodeOptions& options) {
    if (series.num_days() < 2) throw config_error("an episode needs at least 2 dates");
    if (static_cast<Eigen::Index>(series.num_tickers()) != agent.num_stocks()) {
        throw config_error("series has " + std::to_string(series.num_tickers()) + " tickers, agent trades " +
                           std::to_string(agent.num_stocks()));
    }
    const DdpgConfig& cfg = agent.config;
    const std::size_t episode = session.episodes_run++;
    OuNoise noise(agent.num_stocks(), cfg.noise_theta, cfg.noise_sigma,
                  derive_seed(derive_seed(cfg.seed, streams::kNoise), episode));

    EpisodeResult result;
    result.log.episode = episode;
    PortfolioState state = reset(series, initial_balance);
    result.values.push_back(portfolio_value(state));
    Eigen::VectorXd obs = observe(state, agent.scaler);
    double loss_sum = 0.0;
    double objective_sum = 0.0;
    const std::size_t last = series.num_days() - 1;

    for (std::size_t t = 0; t < last; ++t) {
        const Eigen::VectorXd action = select_action(agent, obs, options.explore ? &noise : nullptr);
        const TradeAction executed = clip_to_feasible(state, map_action(action, cfg.max_shares));
        if (options.trade_log != nullptr) options.trade_log->record(series, state, executed);
        StepResult next = step(state, executed, series.prices.row(static_cast<Eigen::Index>(t + 1)).transpose());
        Eigen::VectorXd next_obs = observe(next.state, agent.scaler);
        result.rewards.push_back(next.reward);
        result.values.push_back(portfolio_value(next.state));

        if (options.learn) {
            session.buffer.push({obs, action, next.reward, next_obs, t + 1 == last});
            ++session.total_steps;
            if (session.total_steps >= session.warmup && session.buffer.size() >= cfg.batch_size) {
                const auto batch = session.buffer.sample(cfg.batch_size, session.replay_rng);
                loss_sum += critic_update(agent, batch);
                objective_sum += actor_update(agent, batch);
                update_targets(agent);
                ++result.log.updates;
            }
        }
        state = std::move(next.state);
        obs = std::move(next_obs);
    }
    result.log.final_value = result.values.back();
    if (result.log.updates > 0) {
        result.log.mean_critic_loss = loss_sum / static_cast<double>(result.log.updates);
        result.log.mean_actor_objective = objective_sum / static_cast<double>(result.log.updates);
    }
    return result;
}

void continue_training(Agent& agent, TrainingSession& session, const PriceSeries& series, double initial_balance,
                       std::size_t episodes, TrainingLog& log) {
    for (std::size_t e = 0; e < episodes; ++e) {
        log.episodes.push_back(run_episode(agent, session, series, initial_balance, {}).log);
    }
}

TrainResult train(const PriceSeries& series, const DdpgConfig& cfg, double initial_balance) {
    cfg.validate();
    if (series.num_days() < 2) throw config_error("training series needs at least 2 dates");
    const double reward_scale =
        cfg.reward_scale > 0.0 ? cfg.reward_scale : (initial_balance > 0.0 ? 100.0 / initial_balance : 1.0);
    TrainResult out{make_agent(cfg, ObservationScaler::fit(series, static_cast<double>(cfg.max_shares), initial_balance),
                               reward_scale),
                    {}};
    TrainingSession session = make_session(out.agent);
    continue_training(out.agent, session, series, initial_balance, cfg.episodes, out.log);
    return out;
}

BacktestReport evaluate(Agent& agent, const PriceSeries& series, double initial_balance, bool online_learning,
                        TradeLog* trade_log) {
    TrainingSession session(agent.config.buffer_capacity, derive_seed(agent.config.seed, streams::kOnlineReplay));
    session.warmup = 0;
    EpisodeOptions options;
    options.explore = false;
    options.learn = online_learning;
    options.trade_log = trade_log;
    auto result = run_episode(agent, session, series, initial_balance, options);
    return build_report("ddpg", series.dates, std::move(result.values));
}

// ---------------------------------------------------------------- checkpoint

namespace {
constexpr int kAgentVersion = 1;
}

nlohmann::json to_json(const Agent& a) {
    nlohmann::json j;
    j["format"] = "drltrade.agent";
    j["version"] = kAgentVersion;
    j["config"] = to_json(a.config);
    j["scaler"] = {{"price_scale", std::vector<double>(a.scaler.price_scale.data(),
                                                       a.scaler.price_scale.data() + a.scaler.price_scale.size())},
                   {"holding_scale", a.scaler.holding_scale},
                   {"balance_scale", a.scaler.balance_scale}};
    j["reward_scale"] = a.reward_scale;
    j["actor"] = nn::to_json(a.actor);
    j["critic"] = nn::to_json(a.critic);
    j["target_actor"] = nn::to_json(a.target_actor);
    j["target_critic"] = nn::to_json(a.target_critic);
    j["actor_optimizer"] = nn::to_json(a.actor_opt);
    j["critic_optimizer"] = nn::to_json(a.critic_opt);
    return j;
}

Agent agent_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "drltrade.agent") throw io_error("checkpoint: not an agent document");
        if (j.at("version").get<int>() != kAgentVersion) throw io_error("checkpoint: unsupported agent version");
        Agent a;
        a.config = config_from_json(j.at("config"));
        const auto& sc = j.at("scaler");
        const auto prices = sc.at("price_scale").get<std::vector<double>>();
        a.scaler.price_scale = Eigen::Map<const Eigen::VectorXd>(prices.data(), static_cast<Eigen::Index>(prices.size()));
        a.scaler.holding_scale = sc.at("holding_scale").get<double>();
        a.scaler.balance_scale = sc.at("balance_scale").get<double>();
        a.reward_scale = j.at("reward_scale").get<double>();
        a.actor = nn::mlp_from_json(j.at("actor"));
        a.critic = nn::mlp_from_json(j.at("critic"));
        a.target_actor = nn::mlp_from_json(j.at("target_actor"));
        a.target_critic = nn::mlp_from_json(j.at("target_critic"));
        a.actor_opt = nn::optimizer_from_json(j.at("actor_optimizer"), a.actor);
        a.critic_opt = nn::optimizer_from_json(j.at("critic_optimizer"), a.critic);

        const Eigen::Index d = a.scaler.num_stocks();
        if (a.actor.input_size() != 2 * d + 1 || a.actor.output_size() != d || a.critic.input_size() != 3 * d + 1 ||
            a.critic.output_size() != 1 || !a.target_actor.same_architecture(a.actor) ||
            !a.target_critic.same_architecture(a.critic)) {
            throw io_error("checkpoint: network shapes are inconsistent");
        }
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("checkpoint: malformed agent document: ") + e.what());
    }
}

}  // namespace drltrade::ddpg
