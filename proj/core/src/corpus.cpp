#include "ealm/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include "ealm/errors.hpp"
#include "ealm/random.hpp"

namespace ealm {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace

std::string Sentence::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i].surface;
  }
  return out;
}

Sentence tokenize(std::string_view line) {
  Sentence sentence;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) {
      Token token;
      token.surface = std::string(line.substr(start, i - start));
      sentence.tokens.push_back(std::move(token));
    }
  }
  return sentence;
}

Vocabulary::Vocabulary() {
  words_.emplace_back(kUnknownSurface);
}

Vocabulary Vocabulary::build(std::span<const Sentence> corpus, std::size_t min_freq) {
  Vocabulary vocab;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence.tokens) ++vocab.frequencies_[token.surface];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(vocab.frequencies_.begin(),
                                                          vocab.frequencies_.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [word, count] : ranked) {
    if (count < min_freq) continue;
    vocab.ids_.emplace(word, static_cast<int>(vocab.words_.size()));
    vocab.words_.push_back(word);
  }
  return vocab;
}

Vocabulary Vocabulary::from_parts(std::vector<std::string> words,
                                  std::unordered_map<std::string, std::size_t> frequencies,
                                  StopwordSet stopwords) {
  if (words.empty() || words.front() != kUnknownSurface) {
    throw ConfigError("vocabulary: id 0 must be the unknown placeholder");
  }
  Vocabulary vocab;
  vocab.words_ = std::move(words);
  for (std::size_t i = 1; i < vocab.words_.size(); ++i) {
    if (!vocab.ids_.emplace(vocab.words_[i], static_cast<int>(i)).second) {
      throw ConfigError("vocabulary: duplicate word '" + vocab.words_[i] + "'");
    }
  }
  vocab.frequencies_ = std::move(frequencies);
  vocab.stopwords_ = std::move(stopwords);
  return vocab;
}

int Vocabulary::id(std::string_view word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnknownId : it->second;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
    throw UsageError("Vocabulary::word: id out of range");
  }
  return words_[static_cast<std::size_t>(id)];
}

std::size_t Vocabulary::frequency(std::string_view word) const {
  auto it = frequencies_.find(std::string(word));
  return it == frequencies_.end() ? 0 : it->second;
}

bool Vocabulary::is_stopword(std::string_view word) const {
  if (stopwords_.listed.contains(word)) return true;
  return frequency(word) < stopwords_.rare_cutoff;
}

Token Vocabulary::make_token(std::string_view surface) const {
  Token token;
  token.surface = std::string(surface);
  token.vocab_id = id(surface);
  token.is_unknown = token.vocab_id == kUnknownId;
  token.is_stopword = is_stopword(surface);
  return token;
}

Token Vocabulary::token_for_id(int id) const { return make_token(word(id)); }

void Vocabulary::annotate(Sentence& sentence) const {
  for (auto& token : sentence.tokens) token = make_token(token.surface);
}

std::vector<Sentence> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read file: " + path.string());
  std::vector<Sentence> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(tokenize(line));
  return lines;
}

std::vector<Sentence> load_corpus(const std::filesystem::path& path, std::size_t max_len,
                                  std::size_t sample_size, std::uint64_t seed) {
  if (max_len < 2) throw UsageError("load_corpus: max_len must be >= 2");
  if (sample_size < 1) throw UsageError("load_corpus: sample_size must be >= 1");

  std::vector<Sentence> eligible;
  for (auto& sentence : read_lines(path)) {
    if (!sentence.empty() && sentence.size() < max_len) eligible.push_back(std::move(sentence));
  }
  Rng rng(seed);
  shuffle(eligible, rng);
  if (eligible.size() < sample_size) {
    std::clog << "warning: " << path.string() << " has only " << eligible.size()
              << " eligible sentences (requested " << sample_size << ")\n";
  } else {
    eligible.resize(sample_size);
  }
  return eligible;
}

StopwordSet load_stopwords(const std::optional<std::filesystem::path>& path,
                           const Vocabulary& vocab, std::size_t rare_cutoff) {
  StopwordSet set;
  set.rare_cutoff = rare_cutoff;
  if (path && std::filesystem::exists(*path)) {
    for (const auto& sentence : read_lines(*path)) {
      for (const auto& token : sentence.tokens) set.listed.insert(token.surface);
    }
  }
  for (const auto& [word, count] : vocab.frequencies()) {
    if (count < rare_cutoff) set.listed.insert(word);
  }
  return set;
}

}  // namespace ealm
