#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ealm/encoder.hpp"
#include "ealm/lm.hpp"
#include "ealm/numerics.hpp"
#include "ealm/random.hpp"
#include "ealm/reward.hpp"

namespace ealm {

/// Q-values indexed by EditAction ordinal (Remove, Keep, Replace).
using QValues = std::array<double, 3>;

/// Q-network (2d -> hidden... -> 3) plus the encoder bias vectors.
struct AgentParams {
  nn::DenseNet net;
  EncoderParams encoder;

  /// Glorot-initialized ReLU MLP, zero bias vectors.
  static AgentParams create(std::size_t embedding_dim, std::span<const std::size_t> hidden, Rng& rng);

  std::size_t embedding_dim() const { return encoder.dim(); }

  /// Network blocks followed by the five encoder bias blocks.
  nn::ParameterBlocks parameter_blocks();
  nn::GradientBlocks zero_gradients() const;
};

QValues q_values(const AgentParams& params, const StateVector& s);

struct Choice {
  std::size_t index = 0;
  EditAction action = EditAction::kKeep;

  friend bool operator==(const Choice&, const Choice&) = default;
};

/// Joint argmax over unoperated positions and actions. Ties go to the lower
/// action ordinal, then the lower index. Throws UsageError if every position
/// is operated.
Choice select_greedy(std::span<const QValues> q, const std::vector<bool>& operated);
Choice select_greedy(const std::vector<StateVector>& states, const std::vector<bool>& operated,
                     const AgentParams& params);

enum class EntropyMode {
  kNormalized,  // softmax each Q triple, then Shannon entropy
  kLiteral,     // -sum q log q with q clamped below at 1e-9
};

double state_entropy(const QValues& q, EntropyMode mode);

/// Most uncertain unoperated position (ties to the lower index) with its
/// greedy action.
Choice select_entropy(std::span<const QValues> q, const std::vector<bool>& operated, EntropyMode mode);

struct ExplorationPolicy {
  double epsilon = 0.0;
  double random_share = 0.5;  // within the epsilon branch; the rest is entropy-ordered
  EntropyMode entropy_mode = EntropyMode::kNormalized;
};

/// Epsilon-greedy: greedy with probability 1 - epsilon; otherwise either a
/// uniformly random (position, action) or the entropy-ordered pick.
Choice select_explore(std::span<const QValues> q, const std::vector<bool>& operated,
                      const ExplorationPolicy& policy, Rng& rng);

struct TraceStep {
  StateContext context;  // actions/statuses before the decision, chosen index
  StateVector state;     // exactly what the selector saw
  Choice choice;
  StepOutcome outcome;
};

struct ActionTrace {
  Sentence x;
  std::shared_ptr<const Embeddings> embeddings;
  std::vector<TraceStep> steps;

  std::size_t size() const { return steps.size(); }
};

/// Picks the next (position, action) from the Q-values of every position;
/// entries of operated positions are unspecified.
using ChoiceFn = std::function<Choice(std::span<const QValues> q, const std::vector<bool>& operated)>;

struct RolloutOptions {
  /// Stop once a step violates a constraint; later steps never produce
  /// experiences.
  bool stop_at_violation = true;
};

ActionTrace run_episode(const Sentence& x, const AgentParams& params, const MaskedLM& lm,
                        const RewardConfig& cfg, const ChoiceFn& choose,
                        const RolloutOptions& options = {});

ActionTrace run_episode(const Sentence& x, const AgentParams& params, const MaskedLM& lm,
                        const RewardConfig& cfg, const ExplorationPolicy& policy, Rng& rng,
                        const RolloutOptions& options = {});

/// Fixed sequence of choices, for scripted rollouts.
ChoiceFn scripted_policy(std::vector<Choice> script);

/// Next-state context for step t (1-based) of an episode truncated at
/// t_final: the state recorded at step t + 1, or nullopt (terminal) at t_final.
std::optional<StateContext> next_state_of(const ActionTrace& trace, std::size_t t, std::size_t t_final);

}  // namespace ealm
