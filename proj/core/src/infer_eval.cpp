#include "ealm/infer_eval.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <string_view>

#include "ealm/errors.hpp"

namespace ealm {

SummaryResult summarize(const Sentence& x, const AgentParams& params, const MaskedLM& lm,
                        const RewardConfig& cfg) {
  if (x.empty()) throw UsageError("summarize: empty sentence");
  SummaryResult result;
  result.trace = run_episode(
      x, params, lm, cfg,
      [](std::span<const QValues> q, const std::vector<bool>& operated) { return select_greedy(q, operated); },
      RolloutOptions{.stop_at_violation = false});

  result.cr.push_back(0.0);
  result.rr.push_back(1.0);
  for (const auto& step : result.trace.steps) {
    result.cr.push_back(step.outcome.cr);
    result.rr.push_back(step.outcome.rr);
  }
  for (std::size_t t = 1; t < result.cr.size(); ++t) {
    if (result.cr[t] + result.rr[t] > result.cr[result.t_star] + result.rr[result.t_star]) result.t_star = t;
  }
  result.summary = result.t_star == 0 ? x : result.trace.steps[result.t_star - 1].outcome.summary;
  return result;
}

Sentence byte_cap(const Sentence& s, std::size_t limit) {
  if (limit < 1) throw UsageError("byte_cap: limit must be >= 1");
  Sentence out;
  std::size_t bytes = 0;
  for (const auto& token : s.tokens) {
    const std::size_t next = bytes + (out.empty() ? 0 : 1) + token.surface.size();
    if (next > limit) break;
    bytes = next;
    out.tokens.push_back(token);
  }
  return out;
}

namespace {

using Ngram = std::vector<std::string_view>;

std::map<Ngram, std::size_t> ngram_counts(const Sentence& s, std::size_t n) {
  std::map<Ngram, std::size_t> counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    Ngram g;
    for (std::size_t k = 0; k < n; ++k) g.push_back(s[i + k].surface);
    ++counts[g];
  }
  return counts;
}

RougeScore from_overlap(double overlap, double candidate_total, double reference_total) {
  RougeScore score;
  if (overlap <= 0.0 || candidate_total <= 0.0 || reference_total <= 0.0) return score;
  score.precision = overlap / candidate_total;
  score.recall = overlap / reference_total;
  score.f1 = 2.0 * score.precision * score.recall / (score.precision + score.recall);
  return score;
}

std::size_t lcs_length(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> row(b.size() + 1, 0), prev(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      row[j] = a[i - 1].surface == b[j - 1].surface ? prev[j - 1] + 1 : std::max(prev[j], row[j - 1]);
    }
    std::swap(row, prev);
  }
  return prev[b.size()];
}

template <class Score>
RougeScore best_of(std::span<const Sentence> references, Score score) {
  if (references.empty()) throw UsageError("rouge: at least one reference is required");
  RougeScore best = score(references[0]);
  for (std::size_t r = 1; r < references.size(); ++r) {
    const RougeScore s = score(references[r]);
    if (s.f1 > best.f1) best = s;
  }
  return best;
}

}  // namespace

RougeScore rouge_n(const Sentence& candidate, std::span<const Sentence> references, std::size_t n) {
  if (n < 1) throw UsageError("rouge_n: n must be >= 1");
  const auto cand = ngram_counts(candidate, n);
  const double cand_total = candidate.size() >= n ? static_cast<double>(candidate.size() - n + 1) : 0.0;
  return best_of(references, [&](const Sentence& ref) {
    const auto ref_counts = ngram_counts(ref, n);
    std::size_t overlap = 0;
    for (const auto& [gram, c] : cand) {
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) overlap += std::min(c, it->second);
    }
    const double ref_total = ref.size() >= n ? static_cast<double>(ref.size() - n + 1) : 0.0;
    return from_overlap(static_cast<double>(overlap), cand_total, ref_total);
  });
}

RougeScore rouge_l(const Sentence& candidate, std::span<const Sentence> references) {
  return best_of(references, [&](const Sentence& ref) {
    return from_overlap(static_cast<double>(lcs_length(candidate, ref)), static_cast<double>(candidate.size()),
                        static_cast<double>(ref.size()));
  });
}

std::size_t count_new_words(const Sentence& x, const Sentence& y) {
  std::set<std::string_view> seen;
  for (const auto& t : x.tokens) seen.insert(t.surface);
  return static_cast<std::size_t>(
      std::count_if(y.tokens.begin(), y.tokens.end(), [&](const Token& t) { return !seen.contains(t.surface); }));
}

Sentence lead_n(const Sentence& x, std::size_t n) {
  if (n < 1) throw UsageError("lead_n: n must be >= 1");
  Sentence out;
  out.tokens.assign(x.tokens.begin(), x.tokens.begin() + static_cast<std::ptrdiff_t>(std::min(n, x.size())));
  return out;
}

EvalReport evaluate(std::span<const Sentence> candidates, std::span<const Sentence> sources,
                    const std::vector<std::vector<Sentence>>& references, std::size_t cap) {
  if (candidates.empty()) throw UsageError("evaluate: no candidates");
  if (references.empty()) throw UsageError("evaluate: at least one reference set is required");
  if (sources.size() != candidates.size()) {
    throw ConfigError("evaluate: candidates and sources differ in line count (" +
                      std::to_string(candidates.size()) + " vs " + std::to_string(sources.size()) + ")");
  }
  for (std::size_t r = 0; r < references.size(); ++r) {
    if (references[r].size() != candidates.size()) {
      throw ConfigError("evaluate: reference set " + std::to_string(r + 1) + " has " +
                        std::to_string(references[r].size()) + " lines, candidates have " +
                        std::to_string(candidates.size()));
    }
  }

  EvalReport report;
  report.cap = cap;
  report.sentences = candidates.size();
  auto add = [](RougeScore& total, const RougeScore& s) {
    total.precision += s.precision;
    total.recall += s.recall;
    total.f1 += s.f1;
  };
  std::vector<Sentence> refs(references.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t r = 0; r < references.size(); ++r) refs[r] = references[r][i];
    const Sentence capped = byte_cap(candidates[i], cap);
    add(report.rouge1, rouge_n(capped, refs, 1));
    add(report.rouge2, rouge_n(capped, refs, 2));
    add(report.rougeL, rouge_l(capped, refs));
    report.mean_len += static_cast<double>(candidates[i].size());
    report.mean_nw += static_cast<double>(count_new_words(sources[i], candidates[i]));
  }
  const double n = static_cast<double>(candidates.size());
  for (RougeScore* s : {&report.rouge1, &report.rouge2, &report.rougeL}) {
    s->precision /= n;
    s->recall /= n;
    s->f1 /= n;
  }
  report.mean_len /= n;
  report.mean_nw /= n;
  return report;
}

void write_report(std::ostream& out, const EvalReport& report) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << "# ROUGE on candidates capped at " << report.cap << " bytes (whole tokens); LEN and NW on uncapped\n";
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(8) << "metric" << std::right << std::setw(10) << "P" << std::setw(10) << "R"
      << std::setw(10) << "F1" << '\n';
  const std::pair<const char*, const RougeScore*> rows[] = {
      {"R-1", &report.rouge1}, {"R-2", &report.rouge2}, {"R-L", &report.rougeL}};
  for (const auto& [name, s] : rows) {
    out << std::left << std::setw(8) << name << std::right << std::setw(10) << s->precision << std::setw(10)
        << s->recall << std::setw(10) << s->f1 << '\n';
  }
  out << std::left << std::setw(8) << "LEN" << std::right << std::setw(30) << report.mean_len << '\n';
  out << std::left << std::setw(8) << "NW" << std::right << std::setw(30) << report.mean_nw << '\n';
  out << "\nsentences=" << report.sentences << '\n';
  out << std::setprecision(6);
  out << "rouge1_f1=" << report.rouge1.f1 << "\nrouge2_f1=" << report.rouge2.f1 << "\nrougeL_f1=" << report.rougeL.f1
      << "\nrouge1_p=" << report.rouge1.precision << "\nrouge1_r=" << report.rouge1.recall
      << "\nrouge2_p=" << report.rouge2.precision << "\nrouge2_r=" << report.rouge2.recall
      << "\nrougeL_p=" << report.rougeL.precision << "\nrougeL_r=" << report.rougeL.recall
      << "\nlen=" << report.mean_len << "\nnw=" << report.mean_nw << "\ncap=" << report.cap << '\n';
  out.flags(flags);
  out.precision(precision);
}

}  // namespace ealm
