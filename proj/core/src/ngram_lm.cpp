#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "ealm/errors.hpp"
#include "ealm/lm.hpp"
#include "ealm/random.hpp"

namespace ealm {

namespace {

constexpr std::string_view kMagic = "EALM-LM1";

// Context keys are stored nearest-symbol first, so the key for a shorter
// context is a prefix of the key for a longer one.
void count_all_lengths(NGramMaskedLM::CountTable& table, const std::vector<int>& context,
                       std::size_t min_len, int word) {
  std::vector<int> key;
  key.reserve(context.size());
  for (std::size_t m = 0; m <= context.size(); ++m) {
    if (m > 0) key.push_back(context[m - 1]);
    if (m < min_len) continue;
    auto& counts = table[key];
    ++counts.total;
    ++counts.next[word];
  }
}

std::vector<int> ids_of(const Sentence& sentence, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(sentence.size());
  for (const auto& token : sentence.tokens) ids.push_back(vocab.id(token.surface));
  return ids;
}

template <class T>
void expect(std::istream& in, const T& expected, std::string_view what) {
  T got{};
  if (!(in >> got) || got != expected) {
    throw ConfigError("LM file: expected '" + std::string(what) + "'");
  }
}

template <class T>
T read_value(std::istream& in, std::string_view what) {
  T value{};
  if (!(in >> value)) throw ConfigError("LM file: malformed " + std::string(what));
  return value;
}

void write_table(std::ostream& out, std::string_view name, const NGramMaskedLM::CountTable& table) {
  std::vector<const std::vector<int>*> keys;
  keys.reserve(table.size());
  for (const auto& entry : table) keys.push_back(&entry.first);
  std::sort(keys.begin(), keys.end(), [](const auto* a, const auto* b) {
    if (a->size() != b->size()) return a->size() < b->size();
    return *a < *b;
  });
  out << name << ' ' << keys.size() << '\n';
  for (const auto* key : keys) {
    const auto& counts = table.at(*key);
    out << key->size();
    for (int symbol : *key) out << ' ' << symbol;
    std::vector<std::pair<int, std::size_t>> next(counts.next.begin(), counts.next.end());
    std::sort(next.begin(), next.end());
    out << ' ' << counts.total << ' ' << next.size();
    for (const auto& [word, count] : next) out << ' ' << word << ' ' << count;
    out << '\n';
  }
}

NGramMaskedLM::CountTable read_table(std::istream& in, std::string_view name) {
  expect(in, std::string(name), name);
  const auto contexts = read_value<std::size_t>(in, "table size");
  NGramMaskedLM::CountTable table;
  table.reserve(contexts);
  for (std::size_t c = 0; c < contexts; ++c) {
    std::vector<int> key(read_value<std::size_t>(in, "context length"));
    for (int& symbol : key) symbol = read_value<int>(in, "context symbol");
    NGramMaskedLM::ContextCounts counts;
    counts.total = read_value<std::size_t>(in, "context total");
    const auto entries = read_value<std::size_t>(in, "entry count");
    for (std::size_t e = 0; e < entries; ++e) {
      const int word = read_value<int>(in, "word id");
      counts.next[word] = read_value<std::size_t>(in, "word count");
    }
    table.emplace(std::move(key), std::move(counts));
  }
  return table;
}

}  // namespace

std::size_t NGramMaskedLM::ContextHash::operator()(const std::vector<int>& key) const {
  std::uint64_t h = 0x84222325cbf29ce4ULL ^ key.size();
  for (int symbol : key) h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(symbol)));
  return static_cast<std::size_t>(h);
}

NGramMaskedLM::NGramMaskedLM(Vocabulary vocab, NGramOptions options)
    : vocab_(std::move(vocab)), options_(options) {
  if (options_.order < 1) throw UsageError("n-gram LM: order must be >= 1");
  if (!(options_.smoothing > 0.0)) throw UsageError("n-gram LM: smoothing must be > 0");
  if (!(options_.lambda_left >= 0.0 && options_.lambda_left <= 1.0)) {
    throw UsageError("n-gram LM: lambda_left must be in [0, 1]");
  }
  if (options_.embedding_dim < 1) throw UsageError("n-gram LM: embedding_dim must be >= 1");
}

NGramMaskedLM NGramMaskedLM::train(std::span<const Sentence> corpus, Vocabulary vocab,
                                   const NGramOptions& options) {
  if (corpus.empty()) throw UsageError("train_lm: empty corpus");
  NGramMaskedLM lm(std::move(vocab), options);
  const std::size_t max_context = options.order - 1;

  std::vector<int> context;
  for (const auto& sentence : corpus) {
    const std::vector<int> ids = ids_of(sentence, lm.vocab_);
    const std::size_t n = ids.size();
    if (n == 0) continue;
    for (std::size_t p = 0; p < n; ++p) {
      // Plain left context, closed by BOS.
      context.clear();
      for (std::size_t q = p; q > 0 && context.size() < max_context; --q) context.push_back(ids[q - 1]);
      if (context.size() < max_context) context.push_back(kBos);
      count_all_lengths(lm.left_, context, 0, ids[p]);

      // The same word as the body of "<sentence> SEP <sentence>": only
      // contexts that reach the separator are new.
      context.clear();
      for (std::size_t q = p; q > 0 && context.size() < max_context; --q) context.push_back(ids[q - 1]);
      if (context.size() < max_context) {
        const std::size_t straddle_from = context.size() + 1;
        context.push_back(kSep);
        for (std::size_t q = n; q > 0 && context.size() < max_context; --q) context.push_back(ids[q - 1]);
        if (context.size() < max_context) context.push_back(kBos);
        count_all_lengths(lm.left_, context, straddle_from, ids[p]);
      }

      context.clear();
      for (std::size_t q = p + 1; q < n && context.size() < max_context; ++q) context.push_back(ids[q]);
      if (context.size() < max_context) context.push_back(kEos);
      count_all_lengths(lm.right_, context, 0, ids[p]);
    }
  }

  // PPMI co-occurrence statistics over known words, randomly projected to the
  // embedding dimension with fixed per-context sign vectors.
  const std::size_t vocab_size = lm.vocab_.size();
  std::vector<std::map<int, double>> cooc(vocab_size);
  for (const auto& sentence : corpus) {
    const std::vector<int> ids = ids_of(sentence, lm.vocab_);
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (ids[p] == Vocabulary::kUnknownId) continue;
      const std::size_t hi = std::min(ids.size(), p + options.cooccurrence_window + 1);
      for (std::size_t q = p + 1; q < hi; ++q) {
        if (ids[q] == Vocabulary::kUnknownId) continue;
        cooc[static_cast<std::size_t>(ids[p])][ids[q]] += 1.0;
        cooc[static_cast<std::size_t>(ids[q])][ids[p]] += 1.0;
      }
    }
  }
  std::vector<double> marginal(vocab_size, 0.0);
  double grand_total = 0.0;
  for (std::size_t w = 0; w < vocab_size; ++w) {
    for (const auto& [c, count] : cooc[w]) marginal[w] += count;
    grand_total += marginal[w];
  }
  const std::size_t dim = options.embedding_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<Vector> projection(vocab_size, Vector(dim));
  for (std::size_t c = 0; c < vocab_size; ++c) {
    Rng rng(mix64(0x5eed0000ULL + c));
    for (double& v : projection[c]) v = (rng.next() & 1U) ? scale : -scale;
  }
  lm.embeddings_.assign(vocab_size, Vector(dim, 0.0));
  for (std::size_t w = 1; w < vocab_size; ++w) {
    Vector& row = lm.embeddings_[w];
    for (const auto& [c, count] : cooc[w]) {
      const double pmi = std::log(count * grand_total /
                                  (marginal[w] * marginal[static_cast<std::size_t>(c)]));
      if (pmi <= 0.0) continue;
      const Vector& r = projection[static_cast<std::size_t>(c)];
      for (std::size_t k = 0; k < dim; ++k) row[k] += pmi * r[k];
    }
    double norm = 0.0;
    for (double v : row) norm += v * v;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& v : row) v /= norm;
    }
  }
  return lm;
}

void NGramMaskedLM::add_side_probabilities(const CountTable& table, const std::vector<int>& context,
                                           double weight, Vector& out) const {
  if (weight == 0.0) return;
  const ContextCounts* counts = nullptr;
  std::vector<int> key(context);
  // Back off to the longest context observed in training.
  while (true) {
    auto it = table.find(key);
    if (it != table.end()) {
      counts = &it->second;
      break;
    }
    if (key.empty()) break;
    key.pop_back();
  }
  const double k = options_.smoothing;
  const double vocab_size = static_cast<double>(out.size());
  const double total = counts ? static_cast<double>(counts->total) : 0.0;
  const double denom = total + k * vocab_size;
  const double base = weight * k / denom;
  for (double& p : out) p += base;
  if (counts) {
    for (const auto& [word, count] : counts->next) {
      out[static_cast<std::size_t>(word)] += weight * static_cast<double>(count) / denom;
    }
  }
}

Vector NGramMaskedLM::probabilities(const MaskedSequence& seq, std::size_t position) const {
  if (position >= seq.body.size() || !seq.body[position].is_mask()) {
    throw UsageError("predict: body position is not a mask");
  }
  const std::size_t max_context = options_.order - 1;
  auto symbol = [this](const Slot& slot) { return vocab_.id(slot.word->surface); };

  std::vector<int> left;
  bool blocked = false;
  for (std::size_t q = position; q > 0 && left.size() < max_context; --q) {
    if (seq.body[q - 1].is_mask()) {
      blocked = true;
      break;
    }
    left.push_back(symbol(seq.body[q - 1]));
  }
  if (!blocked && left.size() < max_context) {
    if (!seq.prefix.empty()) {
      left.push_back(kSep);
      for (std::size_t q = seq.prefix.size(); q > 0 && left.size() < max_context; --q) {
        left.push_back(vocab_.id(seq.prefix[q - 1].surface));
      }
    }
    if (left.size() < max_context) left.push_back(kBos);
  }

  std::vector<int> right;
  blocked = false;
  for (std::size_t q = position + 1; q < seq.body.size() && right.size() < max_context; ++q) {
    if (seq.body[q].is_mask()) {
      blocked = true;
      break;
    }
    right.push_back(symbol(seq.body[q]));
  }
  if (!blocked && right.size() < max_context) right.push_back(kEos);

  Vector probs(vocab_.size(), 0.0);
  add_side_probabilities(left_, left, options_.lambda_left, probs);
  add_side_probabilities(right_, right, 1.0 - options_.lambda_left, probs);
  return probs;
}

Vector NGramMaskedLM::embed_word(const Token& token) const {
  return embeddings_[static_cast<std::size_t>(vocab_.id(token.surface))];
}

void NGramMaskedLM::save(std::ostream& out) const {
  out << std::setprecision(17);
  out << kMagic << '\n';
  out << "order " << options_.order << '\n';
  out << "smoothing " << options_.smoothing << '\n';
  out << "lambda_left " << options_.lambda_left << '\n';
  out << "embedding_dim " << options_.embedding_dim << '\n';
  out << "window " << options_.cooccurrence_window << '\n';

  out << "vocab " << vocab_.size() << '\n';
  for (std::size_t id = 1; id < vocab_.size(); ++id) out << vocab_.word(static_cast<int>(id)) << '\n';

  std::map<std::string, std::size_t> freqs(vocab_.frequencies().begin(), vocab_.frequencies().end());
  out << "frequencies " << freqs.size() << '\n';
  for (const auto& [word, count] : freqs) out << word << ' ' << count << '\n';

  const auto& stop = vocab_.stopwords();
  out << "stopwords " << stop.rare_cutoff << ' ' << stop.listed.size() << '\n';
  for (const auto& word : stop.listed) out << word << '\n';

  write_table(out, "left", left_);
  write_table(out, "right", right_);

  out << "embeddings " << embeddings_.size() << ' ' << options_.embedding_dim << '\n';
  for (const auto& row : embeddings_) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << row[k];
    out << '\n';
  }
  out << "end\n";
}

void NGramMaskedLM::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write LM file: " + path.string());
  save(out);
  if (!out) throw ConfigError("failed writing LM file: " + path.string());
}

NGramMaskedLM NGramMaskedLM::load(std::istream& in) {
  expect(in, std::string(kMagic), "EALM-LM1 header");
  NGramOptions options;
  expect(in, std::string("order"), "order");
  options.order = read_value<std::size_t>(in, "order");
  expect(in, std::string("smoothing"), "smoothing");
  options.smoothing = read_value<double>(in, "smoothing");
  expect(in, std::string("lambda_left"), "lambda_left");
  options.lambda_left = read_value<double>(in, "lambda_left");
  expect(in, std::string("embedding_dim"), "embedding_dim");
  options.embedding_dim = read_value<std::size_t>(in, "embedding_dim");
  expect(in, std::string("window"), "window");
  options.cooccurrence_window = read_value<std::size_t>(in, "window");

  expect(in, std::string("vocab"), "vocab");
  const auto vocab_size = read_value<std::size_t>(in, "vocab size");
  if (vocab_size < 1) throw ConfigError("LM file: empty vocabulary");
  std::vector<std::string> words{std::string(Vocabulary::kUnknownSurface)};
  for (std::size_t id = 1; id < vocab_size; ++id) words.push_back(read_value<std::string>(in, "word"));

  expect(in, std::string("frequencies"), "frequencies");
  std::unordered_map<std::string, std::size_t> freqs;
  const auto freq_count = read_value<std::size_t>(in, "frequency count");
  for (std::size_t i = 0; i < freq_count; ++i) {
    auto word = read_value<std::string>(in, "frequency word");
    freqs[word] = read_value<std::size_t>(in, "frequency");
  }

  expect(in, std::string("stopwords"), "stopwords");
  StopwordSet stop;
  stop.rare_cutoff = read_value<std::size_t>(in, "rare cutoff");
  const auto stop_count = read_value<std::size_t>(in, "stopword count");
  for (std::size_t i = 0; i < stop_count; ++i) stop.listed.insert(read_value<std::string>(in, "stopword"));

  NGramMaskedLM lm(Vocabulary::from_parts(std::move(words), std::move(freqs), std::move(stop)), options);
  lm.left_ = read_table(in, "left");
  lm.right_ = read_table(in, "right");

  expect(in, std::string("embeddings"), "embeddings");
  const auto rows = read_value<std::size_t>(in, "embedding rows");
  const auto dim = read_value<std::size_t>(in, "embedding dim");
  if (rows != vocab_size || dim != options.embedding_dim) {
    throw ConfigError("LM file: embedding matrix shape does not match vocabulary");
  }
  lm.embeddings_.assign(rows, Vector(dim));
  for (auto& row : lm.embeddings_) {
    for (double& v : row) v = read_value<double>(in, "embedding value");
  }
  expect(in, std::string("end"), "end");
  return lm;
}

NGramMaskedLM NGramMaskedLM::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read LM file: " + path.string());
  return load(in);
}

NGramMaskedLM train_lm(std::span<const Sentence> corpus, const NGramOptions& options,
                       std::size_t min_freq, const std::optional<std::filesystem::path>& stopword_file,
                       std::size_t rare_cutoff) {
  if (corpus.empty()) throw UsageError("train_lm: empty corpus");
  Vocabulary vocab = Vocabulary::build(corpus, min_freq);
  vocab.set_stopwords(load_stopwords(stopword_file, vocab, rare_cutoff));
  return NGramMaskedLM::train(corpus, std::move(vocab), options);
}

}  // namespace ealm
