#include "ealm/converter.hpp"

#include "ealm/errors.hpp"

namespace ealm {

Skeleton make_skeleton(const Sentence& x, std::span<const EditAction> actions) {
  if (actions.size() != x.size()) throw UsageError("make_skeleton: action count differs from length");
  Skeleton z;
  z.slots.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (actions[i] == EditAction::kKeep) {
      z.slots.emplace_back(x[i]);
    } else {
      z.slots.emplace_back(std::nullopt);
    }
  }
  return z;
}

Sentence compress(const Sentence& x, std::span<const EditAction> actions, const MaskedLM& lm) {
  if (actions.size() != x.size()) throw UsageError("compress: action count differs from length");
  MaskedSequence seq;
  seq.prefix = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    switch (actions[i]) {
      case EditAction::kKeep:
        seq.body.push_back(Slot::of(x[i]));
        break;
      case EditAction::kReplace:
        seq.body.push_back(Slot::mask());
        break;
      case EditAction::kRemove:
        break;
    }
  }
  if (!seq.has_masks()) {
    Sentence y;
    for (auto& slot : seq.body) y.tokens.push_back(std::move(*slot.word));
    return y;
  }
  return lm.fill_masks(seq);
}

MaskedSequence reconstruction_input(const Sentence& prefix, const Skeleton& skeleton) {
  MaskedSequence seq;
  seq.prefix = prefix;
  seq.body.reserve(skeleton.size());
  for (const auto& slot : skeleton.slots) {
    seq.body.push_back(slot ? Slot::of(*slot) : Slot::mask());
  }
  return seq;
}

Sentence reconstruct(const Sentence& prefix, const Skeleton& skeleton,
                     std::span<const EditAction> actions, const MaskedLM& lm) {
  if (actions.size() != skeleton.size()) {
    throw UsageError("reconstruct: action count differs from skeleton length");
  }
  MaskedSequence seq = reconstruction_input(prefix, skeleton);
  if (!seq.has_masks()) {
    Sentence out;
    for (auto& slot : seq.body) out.tokens.push_back(std::move(*slot.word));
    return out;
  }
  return lm.fill_masks(seq);
}

const Conversion& ConversionCache::convert(const std::vector<EditAction>& actions) {
  auto it = cache_.find(actions);
  if (it != cache_.end()) return it->second;
  ++misses_;
  Conversion c;
  c.summary = compress(x_, actions, lm_);
  c.reconstruction = reconstruct(c.summary, make_skeleton(x_, actions), actions, lm_);
  return cache_.emplace(actions, std::move(c)).first->second;
}

}  // namespace ealm
