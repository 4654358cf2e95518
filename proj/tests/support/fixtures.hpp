#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ealm/corpus.hpp"
#include "ealm/errors.hpp"
#include "ealm/lm.hpp"

namespace ealm::testing {

inline Sentence sent(std::string_view text) { return tokenize(text); }

inline std::vector<Sentence> sentences(std::initializer_list<std::string_view> lines) {
  std::vector<Sentence> out;
  for (auto line : lines) out.push_back(tokenize(line));
  return out;
}

inline std::filesystem::path data_path(std::string_view name) {
  return std::filesystem::path(EALM_DATA_DIR) / name;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ealm-" + std::string(tag) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

  std::filesystem::path write(std::string_view name, std::string_view content) const {
    const auto p = path_ / name;
    std::ofstream(p) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Body rendered with "_" for masks, used as a lookup key.
inline std::string body_key(const MaskedSequence& seq) {
  std::string key;
  for (const auto& slot : seq.body) {
    if (!key.empty()) key += ' ';
    key += slot.is_mask() ? std::string("_") : slot.word->surface;
  }
  return key;
}

/// Scripted masked LM: fill_masks returns canned outputs keyed by the masked
/// body, every other quantity is constant. Unscripted masks are filled with
/// the fallback word.
class ScriptedLM final : public MaskedLM {
 public:
  ScriptedLM(std::vector<std::string> words, std::size_t dim, double token_probability)
      : dim_(dim), log_p_(std::log(token_probability)) {
    std::unordered_map<std::string, std::size_t> freq;
    for (auto& w : words) freq[w] = 1;
    words.insert(words.begin(), std::string(Vocabulary::kUnknownSurface));
    vocab_ = Vocabulary::from_parts(std::move(words), std::move(freq), StopwordSet{});
  }

  void script(std::string masked_body, std::string output) { outputs_[std::move(masked_body)] = std::move(output); }
  /// Every masked input passed to fill_masks, in call order.
  const std::vector<MaskedSequence>& fill_inputs() const { return inputs_; }

  const Vocabulary& vocabulary() const override { return vocab_; }
  Vector probabilities(const MaskedSequence& seq, std::size_t position) const override {
    if (position >= seq.body.size() || !seq.body[position].is_mask()) throw UsageError("not a mask");
    return Vector(vocab_.size(), 1.0 / static_cast<double>(vocab_.size()));
  }
  Vector embed_word(const Token&) const override { return Vector(dim_, 0.0); }
  std::size_t embedding_dim() const override { return dim_; }

  Sentence fill_masks(const MaskedSequence& seq, const FillObserver& = {}) const override {
    inputs_.push_back(seq);
    const auto it = outputs_.find(body_key(seq));
    if (it != outputs_.end()) return tokenize(it->second);
    Sentence out;
    for (const auto& slot : seq.body) out.tokens.push_back(slot.is_mask() ? vocab_.token_for_id(1) : *slot.word);
    return out;
  }
  double loglikelihood_raw(const Sentence& y) const override {
    return y.empty() ? -std::numeric_limits<double>::infinity() : log_p_;
  }

 private:
  Vocabulary vocab_;
  std::size_t dim_;
  double log_p_;
  std::map<std::string, std::string> outputs_;
  mutable std::vector<MaskedSequence> inputs_;
};

/// Small LM over the toy corpus lines, shared by several suites.
inline NGramMaskedLM toy_lm(std::size_t dim = 16) {
  const auto corpus = read_lines(data_path("toy_train.txt"));
  NGramOptions options;
  options.embedding_dim = dim;
  return train_lm(corpus, options, 1, data_path("stopwords.txt"), 0);
}

}  // namespace ealm::testing
