#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ealm/agent.hpp"
#include "ealm/encoder.hpp"
#include "ealm/lm.hpp"
#include "ealm/numerics.hpp"
#include "ealm/random.hpp"
#include "ealm/reward.hpp"

namespace ealm {

/// One (s, a, r, s') transition. States are kept as rebuildable contexts so
/// updates can recompute them with the current (or target) bias vectors.
struct Experience {
  StateContext state;
  EditAction action = EditAction::kKeep;
  double reward = 0.0;
  std::optional<StateContext> next;  // nullopt: terminal
  std::size_t episode = 0;
  StateVector realized;  // s as seen by the policy at collection time
};

/// FIFO ring buffer of experiences.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Experience e);
  void push_episode(std::vector<Experience> experiences);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  /// Total experiences ever inserted, evicted ones included.
  std::size_t inserted() const { return inserted_; }

  /// 0 is the oldest retained experience.
  const Experience& operator[](std::size_t i) const { return items_[i]; }

  double mean_reward() const;

 private:
  std::size_t capacity_;
  std::size_t inserted_ = 0;
  std::deque<Experience> items_;
};

/// Buffer indices: without replacement when size >= batch_size, otherwise
/// batch_size draws with replacement. Throws UsageError on an empty buffer.
std::vector<std::size_t> sample_batch(const ReplayBuffer& buffer, std::size_t batch_size, Rng& rng);

struct EpsilonSchedule {
  double start = 0.9;
  double decay = 0.995;
  std::size_t period = 100;
  double floor = 0.03;
};

/// max(floor, start * decay^floor(update_count / period)).
double epsilon_at(std::size_t update_count, const EpsilonSchedule& schedule = {});

struct TrainerConfig {
  double gamma = 0.995;
  std::size_t batch_size = 128;
  std::size_t buffer_capacity = 2000;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;
  nn::ClipMode clip_mode = nn::ClipMode::kGlobalNorm;
  std::size_t target_sync_period = 100;
  std::size_t checkpoint_period = 100;
  EpsilonSchedule epsilon;
  double random_share = 0.5;
  EntropyMode entropy_mode = EntropyMode::kNormalized;
  std::size_t episodes = 2000;
  std::vector<std::size_t> hidden = {200, 200};
  std::uint64_t seed = 1;
  RewardConfig reward;

  void validate() const;
};

/// psi = r for terminal experiences, else r + gamma * max_a' Qbar(s', a').
double td_target(const Experience& e, const AgentParams& target, double gamma);

/// Experiences for steps 1..T of a scored episode.
std::vector<Experience> make_experiences(const ActionTrace& trace, const EpisodeScore& score,
                                         std::size_t episode);

/// Mean squared TD error of the batch and its gradient with respect to the
/// network and bias vectors (targets held fixed).
struct LossAndGradient {
  double loss = 0.0;
  nn::GradientBlocks grads;  // layout of AgentParams::parameter_blocks
};
LossAndGradient dqn_loss(const AgentParams& params, const AgentParams& target,
                         std::span<const Experience* const> batch, double gamma);

/// One clipped Adam step on the DQN loss. Returns the loss before the step.
double update(AgentParams& params, const AgentParams& target, std::span<const Experience* const> batch,
              nn::AdamState& adam, const TrainerConfig& cfg);

inline void sync_target(const AgentParams& params, AgentParams& target) { target = params; }

/// Index of the highest mean reward; ties go to the earliest.
std::size_t select_model(std::span<const double> mean_rewards);

struct TrainingRecord {
  std::size_t update = 0;
  std::size_t episode = 0;
  double loss = 0.0;
  double epsilon = 0.0;
  double mean_reward = 0.0;
};

struct Checkpoint {
  std::size_t update = 0;
  double mean_reward = 0.0;
};

struct TrainingResult {
  AgentParams selected;
  std::size_t selected_checkpoint = 0;
  AgentParams last;
  std::vector<Checkpoint> checkpoints;
  std::vector<TrainingRecord> log;
};

/// Collect-then-update DQN loop: one episode, then one update once the buffer
/// is non-empty. Returns the checkpoint with the best mean buffer reward.
TrainingResult train(std::span<const Sentence> corpus, const MaskedLM& lm, const TrainerConfig& cfg,
                     const std::function<void(const TrainingRecord&)>& on_update = {});

/// One line per record: update=.. episode=.. loss=.. epsilon=.. mean_reward=..
void write_training_log(std::ostream& out, std::span<const TrainingRecord> log);

/// Versioned text format with magic EALM-AG1.
void save_agent(std::ostream& out, const AgentParams& params, const RewardConfig& reward);
void save_agent(const std::filesystem::path& path, const AgentParams& params, const RewardConfig& reward);

struct AgentModel {
  AgentParams params;
  RewardConfig reward;
};
AgentModel load_agent(std::istream& in);
AgentModel load_agent(const std::filesystem::path& path);

}  // namespace ealm
