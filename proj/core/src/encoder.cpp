#include "ealm/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "ealm/errors.hpp"
#include "ealm/random.hpp"

namespace ealm {

namespace {

constexpr double kAttentionFloor = 1e-12;

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

std::size_t status_slot(bool operated) { return operated ? 1 : 0; }

}  // namespace

std::string_view to_string(EditAction a) {
  switch (a) {
    case EditAction::kRemove:
      return "Remove";
    case EditAction::kKeep:
      return "Keep";
    case EditAction::kReplace:
      return "Replace";
  }
  return "?";
}

std::optional<EditAction> parse_action(std::string_view name) {
  for (EditAction a : kAllActions) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

void EditState::commit(std::size_t i, EditAction a) {
  if (i >= actions_.size()) throw UsageError("EditState::commit: index out of range");
  if (operated_[i]) throw UsageError("EditState::commit: word already operated");
  actions_[i] = a;
  operated_[i] = true;
  ++step_;
}

EncoderParams EncoderParams::zeros(std::size_t dim) {
  EncoderParams p;
  for (auto& b : p.action_bias) b.assign(dim, 0.0);
  for (auto& b : p.status_bias) b.assign(dim, 0.0);
  return p;
}

nn::ParameterBlocks EncoderParams::parameter_blocks() {
  nn::ParameterBlocks blocks;
  for (auto& b : action_bias) blocks.emplace_back(b);
  for (auto& b : status_bias) blocks.emplace_back(b);
  return blocks;
}

nn::GradientBlocks EncoderParams::zero_gradients() const {
  return nn::GradientBlocks(5, Vector(dim(), 0.0));
}

Vector hashed_embedding(std::string_view surface, std::size_t dim) {
  Rng rng(mix64(fnv1a(surface)));
  Vector v(dim);
  double norm = 0.0;
  for (double& x : v) {
    x = rng.uniform(-1.0, 1.0);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

Embeddings token_embeddings(const Sentence& x, const MaskedLM& lm) {
  Embeddings out;
  out.reserve(x.size());
  const std::size_t dim = lm.embedding_dim();
  for (const auto& token : x.tokens) {
    Vector e = lm.vocabulary().contains(token.surface) ? lm.embed_word(token) : Vector(dim, 0.0);
    bool empty = true;
    for (double v : e) empty = empty && v == 0.0;
    out.push_back(empty ? hashed_embedding(token.surface, dim) : std::move(e));
  }
  return out;
}

Vector local_encoding(std::span<const double> e, EditAction a, bool operated,
                      const EncoderParams& params) {
  const Vector& ba = params.action_bias[ordinal(a)];
  const Vector& bu = params.status_bias[status_slot(operated)];
  if (ba.size() != e.size() || bu.size() != e.size()) {
    throw UsageError("local_encoding: dimension mismatch");
  }
  Vector l(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) l[k] = e[k] + ba[k] + bu[k];
  return l;
}

Vector attention_weights(const std::vector<Vector>& locals, std::size_t i) {
  if (locals.empty()) throw UsageError("attention_weights: no positions");
  if (i >= locals.size()) throw UsageError("attention_weights: index out of range");
  const std::size_t n = locals.size();
  Vector w(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    w[j] = std::max(0.0, dot(locals[i], locals[j]));
    total += w[j];
  }
  if (total < kAttentionFloor) {
    w.assign(n, 1.0 / static_cast<double>(n));
  } else {
    for (double& v : w) v /= total;
  }
  return w;
}

Vector global_encoding(const std::vector<Vector>& locals, std::size_t i) {
  const Vector w = attention_weights(locals, i);
  Vector g(locals[i].size(), 0.0);
  for (std::size_t j = 0; j < locals.size(); ++j) {
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += w[j] * locals[j][k];
  }
  return g;
}

std::vector<Vector> local_encodings(const Embeddings& e, std::span<const EditAction> actions,
                                    const std::vector<bool>& statuses, const EncoderParams& params) {
  if (actions.size() != e.size() || statuses.size() != e.size()) {
    throw UsageError("encode: embeddings, actions and statuses differ in length");
  }
  std::vector<Vector> locals;
  locals.reserve(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) {
    locals.push_back(local_encoding(e[j], actions[j], statuses[j], params));
  }
  return locals;
}

namespace {

StateVector assemble(const std::vector<Vector>& locals, std::size_t i) {
  const Vector g = global_encoding(locals, i);
  StateVector s;
  s.values.reserve(2 * g.size());
  s.values.insert(s.values.end(), locals[i].begin(), locals[i].end());
  s.values.insert(s.values.end(), g.begin(), g.end());
  return s;
}

}  // namespace

std::vector<StateVector> encode_all(const Embeddings& e, const EditState& edit,
                                    const EncoderParams& params) {
  const auto locals = local_encodings(e, edit.actions(), edit.statuses(), params);
  std::vector<StateVector> states;
  states.reserve(locals.size());
  for (std::size_t i = 0; i < locals.size(); ++i) states.push_back(assemble(locals, i));
  return states;
}

StateVector encode_state(const StateContext& ctx, const EncoderParams& params) {
  const auto locals = local_encodings(*ctx.embeddings, ctx.actions, ctx.statuses, params);
  return assemble(locals, ctx.index);
}

void encode_state_backward(const StateContext& ctx, const EncoderParams& params,
                           std::span<const double> state_grad, nn::GradientBlocks& grads) {
  const auto locals = local_encodings(*ctx.embeddings, ctx.actions, ctx.statuses, params);
  const std::size_t n = locals.size();
  const std::size_t d = params.dim();
  const std::size_t i = ctx.index;
  if (state_grad.size() != 2 * d) throw UsageError("encode_state_backward: gradient dimension");
  if (grads.size() != 5) throw UsageError("encode_state_backward: gradient layout");

  const auto dl_direct = state_grad.subspan(0, d);
  const auto dg = state_grad.subspan(d, d);
  std::vector<Vector> dl(n, Vector(d, 0.0));
  for (std::size_t k = 0; k < d; ++k) dl[i][k] += dl_direct[k];

  Vector z(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    z[j] = dot(locals[i], locals[j]);
    total += std::max(0.0, z[j]);
  }

  if (total < kAttentionFloor) {
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < d; ++k) dl[j][k] += w * dg[k];
    }
  } else {
    Vector w(n), q(n);
    double q_mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      w[j] = std::max(0.0, z[j]) / total;
      q[j] = dot(dg, locals[j]);
      q_mean += w[j] * q[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < d; ++k) dl[j][k] += w[j] * dg[k];
      if (z[j] <= 0.0) continue;
      const double dz = (q[j] - q_mean) / total;
      for (std::size_t k = 0; k < d; ++k) {
        dl[j][k] += dz * locals[i][k];
        dl[i][k] += dz * locals[j][k];
      }
    }
  }

  for (std::size_t j = 0; j < n; ++j) {
    auto& ga = grads[ordinal(ctx.actions[j])];
    auto& gu = grads[3 + status_slot(ctx.statuses[j])];
    for (std::size_t k = 0; k < d; ++k) {
      ga[k] += dl[j][k];
      gu[k] += dl[j][k];
    }
  }
}

}  // namespace ealm
