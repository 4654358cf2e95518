#include "ealm/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ealm/converter.hpp"
#include "ealm/errors.hpp"

namespace ealm {

AgentParams AgentParams::create(std::size_t embedding_dim, std::span<const std::size_t> hidden, Rng& rng) {
  std::vector<std::size_t> dims{2 * embedding_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(kAllActions.size());
  AgentParams params;
  params.net = nn::DenseNet::glorot(dims, nn::Activation::kRelu, nn::Activation::kIdentity, rng);
  params.encoder = EncoderParams::zeros(embedding_dim);
  return params;
}

nn::ParameterBlocks AgentParams::parameter_blocks() {
  nn::ParameterBlocks blocks = net.parameter_blocks();
  for (auto block : encoder.parameter_blocks()) blocks.push_back(block);
  return blocks;
}

nn::GradientBlocks AgentParams::zero_gradients() const {
  nn::GradientBlocks grads = net.zero_gradients();
  for (auto& block : encoder.zero_gradients()) grads.push_back(std::move(block));
  return grads;
}

QValues q_values(const AgentParams& params, const StateVector& s) {
  if (s.values.size() != params.net.input_dim()) throw UsageError("q_values: state dimension mismatch");
  const auto out = params.net.forward(s.values);
  return {out[0], out[1], out[2]};
}

Choice select_greedy(std::span<const QValues> q, const std::vector<bool>& operated) {
  if (q.size() != operated.size()) throw UsageError("select_greedy: length mismatch");
  std::optional<Choice> best;
  double best_q = -std::numeric_limits<double>::infinity();
  for (EditAction a : kAllActions) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (operated[i]) continue;
      const double value = q[i][ordinal(a)];
      if (!best || value > best_q) {
        best = Choice{i, a};
        best_q = value;
      }
    }
  }
  if (!best) throw UsageError("select_greedy: every position is already operated");
  return *best;
}

Choice select_greedy(const std::vector<StateVector>& states, const std::vector<bool>& operated,
                     const AgentParams& params) {
  std::vector<QValues> q(states.size(), QValues{});
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (i < operated.size() && !operated[i]) q[i] = q_values(params, states[i]);
  }
  return select_greedy(q, operated);
}

double state_entropy(const QValues& q, EntropyMode mode) {
  double h = 0.0;
  if (mode == EntropyMode::kNormalized) {
    const double top = std::max({q[0], q[1], q[2]});
    double z = 0.0;
    QValues p{};
    for (std::size_t a = 0; a < 3; ++a) z += (p[a] = std::exp(q[a] - top));
    for (std::size_t a = 0; a < 3; ++a) {
      const double pa = p[a] / z;
      if (pa > 0.0) h -= pa * std::log(pa);
    }
  } else {
    for (double v : q) {
      const double c = v > 0.0 ? v : 1e-9;
      h -= c * std::log(c);
    }
  }
  return h;
}

namespace {

EditAction argmax_action(const QValues& q) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < 3; ++a) {
    if (q[a] > q[best]) best = a;
  }
  return kAllActions[best];
}

}  // namespace

Choice select_entropy(std::span<const QValues> q, const std::vector<bool>& operated, EntropyMode mode) {
  if (q.size() != operated.size()) throw UsageError("select_entropy: length mismatch");
  std::optional<std::size_t> best;
  double best_h = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (operated[i]) continue;
    const double h = state_entropy(q[i], mode);
    if (!best || h > best_h) {
      best = i;
      best_h = h;
    }
  }
  if (!best) throw UsageError("select_entropy: every position is already operated");
  return Choice{*best, argmax_action(q[*best])};
}

Choice select_explore(std::span<const QValues> q, const std::vector<bool>& operated,
                      const ExplorationPolicy& policy, Rng& rng) {
  if (rng.uniform() >= policy.epsilon) return select_greedy(q, operated);
  if (rng.uniform() < policy.random_share) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < operated.size(); ++i) {
      if (!operated[i]) open.push_back(i);
    }
    if (open.empty()) throw UsageError("select_explore: every position is already operated");
    const std::size_t index = open[rng.uniform_index(open.size())];
    return Choice{index, kAllActions[rng.uniform_index(kAllActions.size())]};
  }
  return select_entropy(q, operated, policy.entropy_mode);
}

ActionTrace run_episode(const Sentence& x, const AgentParams& params, const MaskedLM& lm,
                        const RewardConfig& cfg, const ChoiceFn& choose, const RolloutOptions& options) {
  if (x.empty()) throw UsageError("run_episode: empty sentence");
  if (lm.embedding_dim() != params.embedding_dim()) {
    throw UsageError("run_episode: agent and LM embedding dimensions differ");
  }
  const std::size_t n = x.size();
  ActionTrace trace;
  trace.x = x;
  trace.embeddings = std::make_shared<const Embeddings>(token_embeddings(x, lm));

  EditState edit(n);
  ConversionCache conversions(trace.x, lm);
  std::size_t prev_len = n;
  std::vector<QValues> q(n);
  for (std::size_t t = 1; t <= n; ++t) {
    std::vector<StateVector> states = encode_all(*trace.embeddings, edit, params.encoder);
    for (std::size_t i = 0; i < n; ++i) q[i] = edit.operated(i) ? QValues{} : q_values(params, states[i]);
    const Choice choice = choose(q, edit.statuses());
    if (choice.index >= n || edit.operated(choice.index)) {
      throw UsageError("run_episode: policy chose an operated or out-of-range position");
    }

    TraceStep step;
    step.context = StateContext{trace.embeddings, edit.actions(), edit.statuses(), choice.index};
    step.state = std::move(states[choice.index]);
    step.choice = choice;

    edit.commit(choice.index, choice.action);
    const Conversion& conversion = conversions.convert(edit.actions());
    step.outcome = evaluate_step(trace.x, edit.actions(), t, choice.index, choice.action, prev_len,
                                 conversion, cfg, lm);
    prev_len = conversion.summary.size();
    const bool stop = options.stop_at_violation && step.outcome.violated;
    trace.steps.push_back(std::move(step));
    if (stop) break;
  }
  return trace;
}

ActionTrace run_episode(const Sentence& x, const AgentParams& params, const MaskedLM& lm,
                        const RewardConfig& cfg, const ExplorationPolicy& policy, Rng& rng,
                        const RolloutOptions& options) {
  return run_episode(
      x, params, lm, cfg,
      [&](std::span<const QValues> q, const std::vector<bool>& operated) {
        return select_explore(q, operated, policy, rng);
      },
      options);
}

ChoiceFn scripted_policy(std::vector<Choice> script) {
  auto shared = std::make_shared<std::vector<Choice>>(std::move(script));
  auto cursor = std::make_shared<std::size_t>(0);
  return [shared, cursor](std::span<const QValues>, const std::vector<bool>&) {
    if (*cursor >= shared->size()) throw UsageError("scripted_policy: script exhausted");
    return (*shared)[(*cursor)++];
  };
}

std::optional<StateContext> next_state_of(const ActionTrace& trace, std::size_t t, std::size_t t_final) {
  if (t < 1 || t > t_final || t_final > trace.size()) throw UsageError("next_state_of: need 1 <= t <= T");
  if (t == t_final) return std::nullopt;
  return trace.steps[t].context;
}

}  // namespace ealm
