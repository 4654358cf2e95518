#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ealm/agent.hpp"
#include "ealm/corpus.hpp"
#include "ealm/lm.hpp"
#include "ealm/reward.hpp"

namespace ealm {

struct SummaryResult {
  std::size_t t_star = 0;
  Sentence summary;
  std::vector<double> cr;  // index t = 0..T, step 0 is the untouched input
  std::vector<double> rr;
  ActionTrace trace;
};

/// Greedy episode over every word; returns y at the step maximizing cr + rr
/// (step 0 included, ties to the earliest step). rr follows cfg.rr_mode;
/// the CLI uses exact matching here.
SummaryResult summarize(const Sentence& x, const AgentParams& params, const MaskedLM& lm,
                        const RewardConfig& cfg);

/// Longest token prefix whose space-joined UTF-8 text fits in limit bytes.
Sentence byte_cap(const Sentence& s, std::size_t limit);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Clipped n-gram overlap; the reference with the best F1 wins.
RougeScore rouge_n(const Sentence& candidate, std::span<const Sentence> references, std::size_t n);
/// LCS-based; the reference with the best F1 wins.
RougeScore rouge_l(const Sentence& candidate, std::span<const Sentence> references);

/// Occurrences of y tokens whose surface never appears in x.
std::size_t count_new_words(const Sentence& x, const Sentence& y);

Sentence lead_n(const Sentence& x, std::size_t n);

struct EvalReport {
  RougeScore rouge1;
  RougeScore rouge2;
  RougeScore rougeL;
  double mean_len = 0.0;
  double mean_nw = 0.0;
  std::size_t sentences = 0;
  std::size_t cap = 75;
};

/// references[r][i] is reference r for sentence i. ROUGE uses the byte-capped
/// candidates; LEN uses the uncapped ones. Throws UsageError on empty input
/// and ConfigError on misaligned inputs.
EvalReport evaluate(std::span<const Sentence> candidates, std::span<const Sentence> sources,
                    const std::vector<std::vector<Sentence>>& references, std::size_t cap);

/// Aligned table followed by a key=value block.
void write_report(std::ostream& out, const EvalReport& report);

}  // namespace ealm
