#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ealm {

/// One whitespace-delimited word. vocab_id 0 marks an unknown word.
struct Token {
  std::string surface;
  int vocab_id = 0;
  bool is_stopword = false;
  bool is_unknown = true;

  friend bool operator==(const Token& a, const Token& b) { return a.surface == b.surface; }
};

struct Sentence {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  const Token& operator[](std::size_t i) const { return tokens[i]; }
  Token& operator[](std::size_t i) { return tokens[i]; }

  /// Surfaces joined by single spaces.
  std::string text() const;

  friend bool operator==(const Sentence& a, const Sentence& b) { return a.tokens == b.tokens; }
};

/// Splits on ASCII whitespace; empty fields are dropped. Tokens are left
/// unannotated (unknown) until passed through a Vocabulary.
Sentence tokenize(std::string_view line);

/// Listed stopwords plus a frequency cutoff: a word is in W if it is listed
/// or its corpus frequency is below rare_cutoff.
struct StopwordSet {
  std::set<std::string, std::less<>> listed;
  std::size_t rare_cutoff = 0;
};

class Vocabulary {
 public:
  static constexpr int kUnknownId = 0;
  static constexpr std::string_view kUnknownSurface = "<unk>";

  Vocabulary();

  /// Ids are dense; words with frequency >= min_freq get ids >= 1 in order of
  /// descending frequency, ties broken lexicographically.
  static Vocabulary build(std::span<const Sentence> corpus, std::size_t min_freq);

  /// Reassembles a vocabulary from its serialized parts. words[0] must be the
  /// unknown placeholder.
  static Vocabulary from_parts(std::vector<std::string> words,
                               std::unordered_map<std::string, std::size_t> frequencies,
                               StopwordSet stopwords);

  /// Number of ids including the unknown id.
  std::size_t size() const { return words_.size(); }

  int id(std::string_view word) const;
  const std::string& word(int id) const;
  bool contains(std::string_view word) const { return id(word) != kUnknownId; }

  /// Corpus frequency, also recorded for words below min_freq; 0 if unseen.
  std::size_t frequency(std::string_view word) const;
  const std::unordered_map<std::string, std::size_t>& frequencies() const { return frequencies_; }

  void set_stopwords(StopwordSet stopwords) { stopwords_ = std::move(stopwords); }
  const StopwordSet& stopwords() const { return stopwords_; }
  bool is_stopword(std::string_view word) const;

  Token make_token(std::string_view surface) const;
  Token token_for_id(int id) const;
  void annotate(Sentence& sentence) const;
  Sentence annotated(Sentence sentence) const {
    annotate(sentence);
    return sentence;
  }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  std::vector<std::string> words_;
  std::unordered_map<std::string, int, StringHash, std::equal_to<>> ids_;
  std::unordered_map<std::string, std::size_t> frequencies_;
  StopwordSet stopwords_;
};

/// Reads one pre-tokenized sentence per line, keeps those with
/// 1 <= n < max_len, shuffles with the seed and takes at most sample_size.
/// Throws ConfigError if the file cannot be read.
std::vector<Sentence> load_corpus(const std::filesystem::path& path, std::size_t max_len,
                                  std::size_t sample_size, std::uint64_t seed);

/// Every line of the file as a Sentence, in order, empty lines included.
std::vector<Sentence> read_lines(const std::filesystem::path& path);

/// W = entries of the file (one per line, if the path is given and exists)
/// plus every word whose frequency is below rare_cutoff.
StopwordSet load_stopwords(const std::optional<std::filesystem::path>& path,
                           const Vocabulary& vocab, std::size_t rare_cutoff);

}  // namespace ealm
