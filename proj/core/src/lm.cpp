#include "ealm/lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ealm/errors.hpp"

namespace ealm {

std::vector<std::size_t> MaskedSequence::mask_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i].is_mask()) out.push_back(i);
  }
  return out;
}

bool MaskedSequence::has_masks() const {
  return std::any_of(body.begin(), body.end(), [](const Slot& s) { return s.is_mask(); });
}

MaskedSequence MaskedSequence::from(const Sentence& sentence, Sentence prefix) {
  MaskedSequence seq;
  seq.prefix = std::move(prefix);
  seq.body.reserve(sentence.size());
  for (const auto& token : sentence.tokens) seq.body.push_back(Slot::of(token));
  return seq;
}

WordDistribution WordDistribution::from_dense(std::span<const double> probs) {
  WordDistribution dist;
  dist.ranked.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    dist.ranked.emplace_back(static_cast<int>(i), probs[i]);
  }
  std::stable_sort(dist.ranked.begin(), dist.ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return dist;
}

std::size_t WordDistribution::rank_of(int id) const {
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (ranked[r].first == id) return r;
  }
  return ranked.size();
}

std::pair<int, double> best_word(std::span<const double> probs) {
  if (probs.empty()) throw UsageError("best_word: empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return {static_cast<int>(best), probs[best]};
}

Sentence MaskedLM::fill_masks(const MaskedSequence& seq, const FillObserver& observer) const {
  MaskedSequence work = seq;
  std::vector<std::size_t> remaining = work.mask_positions();
  while (!remaining.empty()) {
    std::size_t chosen = 0;
    int chosen_word = 0;
    double chosen_prob = -1.0;
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      auto [word, prob] = best_word(probabilities(work, remaining[k]));
      if (prob > chosen_prob) {
        chosen = k;
        chosen_word = word;
        chosen_prob = prob;
      }
    }
    const std::size_t position = remaining[chosen];
    if (observer) observer(work, position, chosen_word, chosen_prob);
    work.body[position] = Slot::of(vocabulary().token_for_id(chosen_word));
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(chosen));
  }
  Sentence out;
  out.tokens.reserve(work.body.size());
  for (auto& slot : work.body) out.tokens.push_back(std::move(*slot.word));
  return out;
}

double MaskedLM::loglikelihood_raw(const Sentence& y) const {
  if (y.empty()) return -std::numeric_limits<double>::infinity();
  MaskedSequence seq = MaskedSequence::from(y);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    Slot saved = std::move(seq.body[i]);
    seq.body[i] = Slot::mask();
    const Vector probs = probabilities(seq, i);
    total += std::log(probs[static_cast<std::size_t>(vocabulary().id(y[i].surface))]);
    seq.body[i] = std::move(saved);
  }
  return total / static_cast<double>(y.size());
}

Vector MaskedLM::embed_sentence(const Sentence& s) const {
  Vector sum(embedding_dim(), 0.0);
  for (const auto& token : s.tokens) {
    if (!vocabulary().contains(token.surface)) continue;
    const Vector e = embed_word(token);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += e[k];
  }
  double norm = 0.0;
  for (double v : sum) norm += v * v;
  norm = std::sqrt(norm);
  // Averaging then normalizing equals normalizing the sum.
  if (norm > 0.0) {
    for (double& v : sum) v /= norm;
  }
  return sum;
}

int llh(const MaskedLM& lm, const Sentence& y, double threshold, LlhMode mode) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw UsageError("llh: threshold must be in (0, 1]");
  if (y.empty()) return 0;
  const double score = lm.loglikelihood_raw(y);
  const double value = mode == LlhMode::kGeometric ? std::exp(score) : score;
  return value > threshold ? 1 : 0;
}

double sim(const MaskedLM& lm, const Sentence& x, const Sentence& y) {
  const Vector ex = lm.embed_sentence(x);
  const Vector ey = lm.embed_sentence(y);
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t k = 0; k < ex.size(); ++k) {
    dot += ex[k] * ey[k];
    nx += ex[k] * ex[k];
    ny += ey[k] * ey[k];
  }
  if (nx == 0.0 || ny == 0.0) return 0.5;
  const double cosine = std::clamp(dot / std::sqrt(nx * ny), -1.0, 1.0);
  return (cosine + 1.0) / 2.0;
}

}  // namespace ealm
