#include "ealm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "ealm/errors.hpp"

namespace ealm {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw UsageError("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::push(Experience e) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(e));
  ++inserted_;
}

void ReplayBuffer::push_episode(std::vector<Experience> experiences) {
  for (auto& e : experiences) push(std::move(e));
}

double ReplayBuffer::mean_reward() const {
  if (items_.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : items_) total += e.reward;
  return total / static_cast<double>(items_.size());
}

std::vector<std::size_t> sample_batch(const ReplayBuffer& buffer, std::size_t batch_size, Rng& rng) {
  if (buffer.empty()) throw UsageError("sample_batch: empty replay buffer");
  const std::size_t n = buffer.size();
  std::vector<std::size_t> picks;
  picks.reserve(batch_size);
  if (n < batch_size) {
    for (std::size_t k = 0; k < batch_size; ++k) picks.push_back(rng.uniform_index(n));
    return picks;
  }
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t k = 0; k < batch_size; ++k) {
    std::swap(pool[k], pool[k + rng.uniform_index(n - k)]);
    picks.push_back(pool[k]);
  }
  return picks;
}

double epsilon_at(std::size_t update_count, const EpsilonSchedule& schedule) {
  const double decays = static_cast<double>(update_count / schedule.period);
  return std::max(schedule.floor, schedule.start * std::pow(schedule.decay, decays));
}

void TrainerConfig::validate() const {
  reward.validate();
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in [0, 1]");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (buffer_capacity < 1) throw ConfigError("buffer_capacity must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
  if (target_sync_period < 1) throw ConfigError("target_sync_period must be >= 1");
  if (checkpoint_period < 1) throw ConfigError("checkpoint_period must be >= 1");
  if (epsilon.period < 1) throw ConfigError("epsilon_decay_period must be >= 1");
  if (!(epsilon.floor >= 0.0 && epsilon.floor <= epsilon.start && epsilon.start <= 1.0)) {
    throw ConfigError("epsilon schedule needs 0 <= epsilon_min <= epsilon_start <= 1");
  }
  if (!(epsilon.decay > 0.0 && epsilon.decay <= 1.0)) throw ConfigError("epsilon_decay must be in (0, 1]");
  if (!(random_share >= 0.0 && random_share <= 1.0)) throw ConfigError("random_share must be in [0, 1]");
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (hidden.empty()) throw ConfigError("hidden_units must name at least one layer");
}

double td_target(const Experience& e, const AgentParams& target, double gamma) {
  if (!e.next) return e.reward;
  const QValues q = q_values(target, encode_state(*e.next, target.encoder));
  return e.reward + gamma * std::max({q[0], q[1], q[2]});
}

std::vector<Experience> make_experiences(const ActionTrace& trace, const EpisodeScore& score,
                                         std::size_t episode) {
  std::vector<Experience> out;
  out.reserve(score.t_final);
  for (std::size_t t = 1; t <= score.t_final; ++t) {
    const TraceStep& step = trace.steps[t - 1];
    Experience e;
    e.state = step.context;
    e.action = step.choice.action;
    e.reward = score.rewards[t - 1];
    e.next = next_state_of(trace, t, score.t_final);
    e.episode = episode;
    e.realized = step.state;
    out.push_back(std::move(e));
  }
  return out;
}

LossAndGradient dqn_loss(const AgentParams& params, const AgentParams& target,
                         std::span<const Experience* const> batch, double gamma) {
  if (batch.empty()) throw UsageError("update: empty batch");
  LossAndGradient result;
  result.grads = params.zero_gradients();
  const std::size_t net_blocks = 2 * params.net.layers().size();
  nn::GradientBlocks encoder_grads = params.encoder.zero_gradients();
  const double scale = 1.0 / static_cast<double>(batch.size());

  for (const Experience* e : batch) {
    const double psi = td_target(*e, target, gamma);
    const StateVector s = encode_state(e->state, params.encoder);
    const nn::ForwardCache cache = params.net.forward_cached(s.values);
    const double diff = cache.output[ordinal(e->action)] - psi;
    result.loss += diff * diff * scale;

    std::vector<double> out_grad(cache.output.size(), 0.0);
    out_grad[ordinal(e->action)] = 2.0 * diff * scale;
    nn::BackwardResult back = params.net.backward(cache, out_grad);
    for (std::size_t b = 0; b < net_blocks; ++b) {
      auto& dst = result.grads[b];
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += back.params[b][k];
    }
    encode_state_backward(e->state, params.encoder, back.input_grad, encoder_grads);
  }
  for (std::size_t b = 0; b < encoder_grads.size(); ++b) result.grads[net_blocks + b] = std::move(encoder_grads[b]);
  return result;
}

double update(AgentParams& params, const AgentParams& target, std::span<const Experience* const> batch,
              nn::AdamState& adam, const TrainerConfig& cfg) {
  LossAndGradient lg = dqn_loss(params, target, batch, cfg.gamma);
  if (cfg.clip_mode == nn::ClipMode::kGlobalNorm) {
    nn::clip_global_norm(lg.grads, cfg.clip_norm);
  } else {
    nn::clip_per_value(lg.grads, cfg.clip_norm);
  }
  adam.step(params.parameter_blocks(), lg.grads);
  return lg.loss;
}

std::size_t select_model(std::span<const double> mean_rewards) {
  if (mean_rewards.empty()) throw UsageError("select_model: no checkpoints recorded");
  std::size_t best = 0;
  for (std::size_t i = 1; i < mean_rewards.size(); ++i) {
    if (mean_rewards[i] > mean_rewards[best]) best = i;
  }
  return best;
}

TrainingResult train(std::span<const Sentence> corpus, const MaskedLM& lm, const TrainerConfig& cfg,
                     const std::function<void(const TrainingRecord&)>& on_update) {
  cfg.validate();
  std::vector<const Sentence*> pool;
  for (const auto& s : corpus) {
    if (!s.empty()) pool.push_back(&s);
  }
  if (pool.empty()) throw UsageError("train: corpus has no non-empty sentences");

  Rng root(cfg.seed);
  Rng init_rng = root.split();
  Rng order_rng = root.split();
  Rng explore_rng = root.split();
  Rng batch_rng = root.split();

  AgentParams params = AgentParams::create(lm.embedding_dim(), cfg.hidden, init_rng);
  AgentParams target = params;
  nn::AdamState adam(nn::AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8}, params.parameter_blocks());
  ReplayBuffer buffer(cfg.buffer_capacity);

  TrainingResult result;
  std::vector<double> checkpoint_rewards;
  std::optional<AgentParams> best;
  std::size_t updates = 0;
  std::size_t cursor = pool.size();
  std::vector<const Sentence*> order;

  auto record_checkpoint = [&] {
    const double mean = buffer.mean_reward();
    result.checkpoints.push_back(Checkpoint{updates, mean});
    checkpoint_rewards.push_back(mean);
    if (!best || mean > checkpoint_rewards[result.selected_checkpoint]) {
      best = params;
      result.selected_checkpoint = checkpoint_rewards.size() - 1;
    }
  };

  for (std::size_t episode = 0; episode < cfg.episodes; ++episode) {
    if (cursor == pool.size()) {
      order = pool;
      shuffle(order, order_rng);
      cursor = 0;
    }
    const Sentence& x = *order[cursor++];

    ExplorationPolicy policy;
    policy.epsilon = epsilon_at(updates, cfg.epsilon);
    policy.random_share = cfg.random_share;
    policy.entropy_mode = cfg.entropy_mode;
    const ActionTrace trace = run_episode(x, params, lm, cfg.reward, policy, explore_rng);
    std::vector<StepOutcome> outcomes;
    outcomes.reserve(trace.size());
    for (const auto& step : trace.steps) outcomes.push_back(step.outcome);
    const EpisodeScore scored = score_episode(trace.x, outcomes, cfg.reward, lm);
    buffer.push_episode(make_experiences(trace, scored, episode));

    if (buffer.empty()) continue;
    const auto picks = sample_batch(buffer, cfg.batch_size, batch_rng);
    std::vector<const Experience*> batch;
    batch.reserve(picks.size());
    for (std::size_t i : picks) batch.push_back(&buffer[i]);
    const double loss = update(params, target, batch, adam, cfg);
    ++updates;

    TrainingRecord record{updates, episode + 1, loss, policy.epsilon, buffer.mean_reward()};
    result.log.push_back(record);
    if (on_update) on_update(record);

    if (updates % cfg.target_sync_period == 0) sync_target(params, target);
    if (updates % cfg.checkpoint_period == 0) record_checkpoint();
  }
  if (result.checkpoints.empty() || result.checkpoints.back().update != updates) record_checkpoint();

  result.selected = std::move(*best);
  result.last = std::move(params);
  return result;
}

void write_training_log(std::ostream& out, std::span<const TrainingRecord> log) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(10);
  for (const auto& r : log) {
    out << "update=" << r.update << " episode=" << r.episode << " loss=" << r.loss
        << " epsilon=" << r.epsilon << " mean_reward=" << r.mean_reward << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace ealm
