#pragma once

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ealm/corpus.hpp"
#include "ealm/encoder.hpp"
#include "ealm/lm.hpp"

namespace ealm {

/// x with every non-Keep word replaced by a null slot.
struct Skeleton {
  std::vector<std::optional<Token>> slots;

  std::size_t size() const { return slots.size(); }
  bool is_null(std::size_t i) const { return !slots[i].has_value(); }
};

Skeleton make_skeleton(const Sentence& x, std::span<const EditAction> actions);

/// Summary y: Keep words copied, Remove words dropped, Replace positions
/// filled by the LM with x as prefix context.
Sentence compress(const Sentence& x, std::span<const EditAction> actions, const MaskedLM& lm);

/// Masked body used by reconstruct: every null slot of the skeleton masked.
MaskedSequence reconstruction_input(const Sentence& prefix, const Skeleton& skeleton);

/// Recovered sentence x_hat: Keep words copied, every null slot filled by the
/// LM with the summary as prefix context.
Sentence reconstruct(const Sentence& prefix, const Skeleton& skeleton,
                     std::span<const EditAction> actions, const MaskedLM& lm);

struct Conversion {
  Sentence summary;
  Sentence reconstruction;
};

/// Memoizes compress/reconstruct per action vector for one input sentence.
class ConversionCache {
 public:
  ConversionCache(const Sentence& x, const MaskedLM& lm) : x_(x), lm_(lm) {}

  const Conversion& convert(const std::vector<EditAction>& actions);
  std::size_t misses() const { return misses_; }

 private:
  const Sentence& x_;
  const MaskedLM& lm_;
  std::map<std::vector<EditAction>, Conversion> cache_;
  std::size_t misses_ = 0;
};

}  // namespace ealm
