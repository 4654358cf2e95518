#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ealm/corpus.hpp"

namespace ealm {

using Vector = std::vector<double>;

/// One body position of a masked input: a concrete word or a mask.
struct Slot {
  std::optional<Token> word;

  static Slot mask() { return Slot{}; }
  static Slot of(Token token) { return Slot{std::move(token)}; }
  bool is_mask() const { return !word.has_value(); }
};

/// Masked input to the language model: an optional prefix sentence followed
/// (across a separator) by a body whose positions may be masked.
struct MaskedSequence {
  Sentence prefix;
  std::vector<Slot> body;

  std::vector<std::size_t> mask_positions() const;
  bool has_masks() const;
  static MaskedSequence from(const Sentence& sentence, Sentence prefix = {});
};

/// Full distribution over vocabulary ids, ranked by descending probability
/// (ties by ascending id).
struct WordDistribution {
  std::vector<std::pair<int, double>> ranked;

  static WordDistribution from_dense(std::span<const double> probs);

  int best_id() const { return ranked.front().first; }
  double best_probability() const { return ranked.front().second; }
  /// 0-based rank of id, or ranked.size() if absent.
  std::size_t rank_of(int id) const;
  bool in_top_k(int id, std::size_t k) const { return rank_of(id) < k; }
};

/// Argmax over a dense distribution, ties to the lowest id.
std::pair<int, double> best_word(std::span<const double> probs);

enum class LlhMode { kGeometric, kRaw };

/// Called once per committed mask during autoregressive filling: the state
/// before the commit, the committed position, and the chosen word/probability.
using FillObserver =
    std::function<void(const MaskedSequence& before, std::size_t position, int word, double prob)>;

/// Masked language model capability used by the converter, the reward and the
/// encoder. Implementations must be pure: identical inputs give identical
/// outputs.
class MaskedLM {
 public:
  virtual ~MaskedLM() = default;

  virtual const Vocabulary& vocabulary() const = 0;

  /// Dense distribution over all vocabulary ids for a masked body position.
  /// Throws UsageError if the position is not a mask.
  virtual Vector probabilities(const MaskedSequence& seq, std::size_t position) const = 0;

  virtual Vector embed_word(const Token& token) const = 0;
  virtual std::size_t embedding_dim() const = 0;

  WordDistribution predict(const MaskedSequence& seq, std::size_t position) const {
    return WordDistribution::from_dense(probabilities(seq, position));
  }

  /// Autoregressive filling: repeatedly commit the mask whose best word is
  /// most probable, until no mask remains. Returns the realized body.
  virtual Sentence fill_masks(const MaskedSequence& seq, const FillObserver& observer = {}) const;

  /// Mean over positions of log P(y_i | y with i masked); -inf for empty y.
  virtual double loglikelihood_raw(const Sentence& y) const;

  /// L2-normalized mean of embed_word over known tokens; zero if none.
  Vector embed_sentence(const Sentence& s) const;
};

/// Fluency indicator: 1 if the (geometric-mean probability | raw mean
/// log-probability) exceeds threshold, else 0. Empty y scores 0.
int llh(const MaskedLM& lm, const Sentence& y, double threshold, LlhMode mode = LlhMode::kGeometric);

/// (cos(embed(x), embed(y)) + 1) / 2, or 0.5 if either embedding is zero.
double sim(const MaskedLM& lm, const Sentence& x, const Sentence& y);

struct NGramOptions {
  std::size_t order = 3;
  double smoothing = 0.1;
  double lambda_left = 0.5;
  std::size_t embedding_dim = 64;
  std::size_t cooccurrence_window = 2;
};

/// Reference masked LM: interpolated left-context and right-context n-gram
/// models with add-k smoothing, plus PPMI word vectors.
///
/// Each side uses the longest mask-free context (up to order - 1 symbols) that
/// was observed in training, then applies add-k smoothing at that length. For
/// body position 0 the prefix feeds the left context across a separator symbol.
class NGramMaskedLM final : public MaskedLM {
 public:
  // Context-only symbols. They are never predicted.
  static constexpr int kBos = -1;
  static constexpr int kEos = -2;
  static constexpr int kSep = -3;

  struct ContextCounts {
    std::size_t total = 0;
    std::unordered_map<int, std::size_t> next;
  };
  struct ContextHash {
    std::size_t operator()(const std::vector<int>& key) const;
  };
  using CountTable = std::unordered_map<std::vector<int>, ContextCounts, ContextHash>;

  /// Vocabulary must already be built; sentences are re-annotated against it.
  static NGramMaskedLM train(std::span<const Sentence> corpus, Vocabulary vocab,
                             const NGramOptions& options = {});

  const Vocabulary& vocabulary() const override { return vocab_; }
  Vector probabilities(const MaskedSequence& seq, std::size_t position) const override;
  Vector embed_word(const Token& token) const override;
  std::size_t embedding_dim() const override { return options_.embedding_dim; }

  const NGramOptions& options() const { return options_; }
  const CountTable& left_counts() const { return left_; }
  const CountTable& right_counts() const { return right_; }

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static NGramMaskedLM load(std::istream& in);
  static NGramMaskedLM load(const std::filesystem::path& path);

 private:
  NGramMaskedLM(Vocabulary vocab, NGramOptions options);

  void add_side_probabilities(const CountTable& table, const std::vector<int>& context,
                              double weight, Vector& out) const;

  Vocabulary vocab_;
  NGramOptions options_;
  CountTable left_;
  CountTable right_;
  std::vector<Vector> embeddings_;  // one unit (or zero) row per vocabulary id
};

/// Builds the vocabulary (min_freq), the stopword set W (optional list file
/// plus rare_cutoff) and the n-gram LM in one call.
NGramMaskedLM train_lm(std::span<const Sentence> corpus, const NGramOptions& options,
                       std::size_t min_freq = 1,
                       const std::optional<std::filesystem::path>& stopword_file = std::nullopt,
                       std::size_t rare_cutoff = 0);

}  // namespace ealm
