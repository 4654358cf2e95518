#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ealm/corpus.hpp"
#include "ealm/lm.hpp"
#include "ealm/numerics.hpp"

namespace ealm {

/// Ordinals are fixed: they index Q-value outputs, bias vectors and files.
enum class EditAction : std::uint8_t { kRemove = 0, kKeep = 1, kReplace = 2 };

inline constexpr std::array<EditAction, 3> kAllActions = {EditAction::kRemove, EditAction::kKeep,
                                                          EditAction::kReplace};

constexpr std::size_t ordinal(EditAction a) { return static_cast<std::size_t>(a); }
std::string_view to_string(EditAction a);
std::optional<EditAction> parse_action(std::string_view name);

/// Per-word actions and operated flags for one episode. Undecided words
/// carry Keep.
class EditState {
 public:
  explicit EditState(std::size_t n) : actions_(n, EditAction::kKeep), operated_(n, false) {}

  std::size_t size() const { return actions_.size(); }
  std::size_t step() const { return step_; }
  bool finished() const { return step_ == actions_.size(); }
  bool operated(std::size_t i) const { return operated_[i]; }

  const std::vector<EditAction>& actions() const { return actions_; }
  const std::vector<bool>& statuses() const { return operated_; }

  /// Records the decision for word i. Throws UsageError if already operated.
  void commit(std::size_t i, EditAction a);

 private:
  std::vector<EditAction> actions_;
  std::vector<bool> operated_;
  std::size_t step_ = 0;
};

using Embeddings = std::vector<Vector>;

/// Learnable bias vectors added to frozen word embeddings.
struct EncoderParams {
  std::array<Vector, 3> action_bias;  // by EditAction ordinal
  std::array<Vector, 2> status_bias;  // [not operated, operated]

  static EncoderParams zeros(std::size_t dim);
  std::size_t dim() const { return action_bias[0].size(); }

  /// The five bias vectors: Remove, Keep, Replace, unoperated, operated.
  nn::ParameterBlocks parameter_blocks();
  nn::GradientBlocks zero_gradients() const;
};

/// s = [l; g] stored contiguously.
struct StateVector {
  Vector values;

  std::size_t dim() const { return values.size() / 2; }
  std::span<const double> local() const { return {values.data(), dim()}; }
  std::span<const double> global() const { return {values.data() + dim(), dim()}; }
};

/// Frozen per-token vectors. Known words use the LM's word vector; unknown
/// words (and known words with an empty vector) get a unit vector seeded by
/// a hash of the surface form.
Embeddings token_embeddings(const Sentence& x, const MaskedLM& lm);

/// Deterministic unit vector keyed by a surface form.
Vector hashed_embedding(std::string_view surface, std::size_t dim);

/// l = e + b^a + b^u.
Vector local_encoding(std::span<const double> e, EditAction a, bool operated,
                      const EncoderParams& params);

/// ReLU attention weights of position i over all positions (self included).
/// Falls back to uniform weights if the normalizer is below 1e-12.
Vector attention_weights(const std::vector<Vector>& locals, std::size_t i);

/// g_i = sum_j w_j l_j.
Vector global_encoding(const std::vector<Vector>& locals, std::size_t i);

/// Everything needed to rebuild one word's state: the episode's embeddings
/// plus the action/status vectors at the time and the word index.
struct StateContext {
  std::shared_ptr<const Embeddings> embeddings;
  std::vector<EditAction> actions;
  std::vector<bool> statuses;
  std::size_t index = 0;
};

std::vector<Vector> local_encodings(const Embeddings& e, std::span<const EditAction> actions,
                                    const std::vector<bool>& statuses, const EncoderParams& params);

/// States of every position for the current edit state.
std::vector<StateVector> encode_all(const Embeddings& e, const EditState& edit,
                                    const EncoderParams& params);

StateVector encode_state(const StateContext& ctx, const EncoderParams& params);

/// Accumulates d(loss)/d(bias vectors) into grads (layout of
/// EncoderParams::parameter_blocks) given d(loss)/d(s) for ctx's state.
void encode_state_backward(const StateContext& ctx, const EncoderParams& params,
                           std::span<const double> state_grad, nn::GradientBlocks& grads);

}  // namespace ealm
