// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "dqn_fixtures.hpp"
#include "ealm/agent.hpp"
#include "ealm/cli.hpp"
#include "ealm/config.hpp"
#include "ealm/converter.hpp"
#include "ealm/infer_eval.hpp"
#include "ealm/reward.hpp"
#include "ealm/trainer.hpp"
#include "fixtures.hpp"

using namespace ealm;
using namespace ealm::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Collects failed checks for one criterion.
class Criterion {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    failed_ |= !ok;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(12);
    s << what << ": got " << got << ", want " << want << " +- " << tol;
    check(std::abs(got - want) <= tol, s.str());
  }
  void note(const std::string& text) { notes_ += (notes_.empty() ? "" : "; ") + text; }

  bool passed() const { return !failed_; }
  const std::vector<std::string>& failures() const { return failures_; }
  const std::string& notes() const { return notes_; }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
  std::string notes_;
};

int g_failed = 0;

void report(int id, const std::string& title, const std::function<void(Criterion&)>& body) {
  Criterion c;
  const auto start = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.check(false, std::string("exception: ") + e.what());
  }
  char elapsed[32];
  std::snprintf(elapsed, sizeof elapsed, "%.1fs", seconds_since(start));
  std::cout << (c.passed() ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " [" << elapsed;
  if (!c.notes().empty()) std::cout << "; " << c.notes();
  std::cout << "]\n";
  for (const auto& f : c.failures()) std::cout << "    " << f << '\n';
  std::cout.flush();
  if (!c.passed()) ++g_failed;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------- 1

void reward_table(Criterion& c) {
  const Sentence x = sent("May the force be with you");
  const double tol = 1e-9;

  for (StepRewardMode mode : {StepRewardMode::kUnit, StepRewardMode::kFormula}) {
    const bool unit = mode == StepRewardMode::kUnit;
    const std::string tag = unit ? "unit: " : "formula: ";
    ScriptedLM lm({"I", "will", "always"}, 4, 0.5);
    lm.script("_ the force be with you", "May the force be with you");
    lm.script("_ _ force be with you", "May the force be with you");
    lm.script("_ _ _ be with you", "I will always be with you");

    RewardConfig cfg;
    cfg.tau = 0.5;
    cfg.rho = 0.3;
    cfg.alpha = 0.1;
    cfg.beta = 0.1;
    cfg.rr_mode = RrMode::kExact;
    cfg.step_reward_mode = mode;

    Rng rng(1);
    const std::size_t hidden[] = {4};
    const AgentParams params = AgentParams::create(4, hidden, rng);
    std::vector<Choice> script;
    for (std::size_t i = 0; i < x.size(); ++i) script.push_back(Choice{i, EditAction::kRemove});
    const ActionTrace trace = run_episode(x, params, lm, cfg, scripted_policy(script));
    c.check(trace.size() == 3, tag + "episode stops after step 3");
    if (trace.size() != 3) continue;

    const double tau[] = {1.0 - 0.5 / 6.0, 1.0 - 1.0 / 6.0, 0.75};
    const double rho[] = {0.05, 0.10, 0.15};
    const double cr[] = {1.0 / 6.0, 1.0 / 3.0, 0.5};
    const double rr[] = {1.0, 1.0, 0.5};
    std::vector<StepOutcome> outcomes;
    for (std::size_t k = 0; k < 3; ++k) {
      const StepOutcome& o = trace.steps[k].outcome;
      const std::string step = tag + "step " + std::to_string(k + 1) + " ";
      c.near(o.tau_t, tau[k], tol, step + "tau");
      c.near(o.rho_t, rho[k], tol, step + "rho");
      c.near(o.cr, cr[k], tol, step + "cr");
      c.near(o.rr, rr[k], tol, step + "rr");
      c.check(o.violated == (k == 2), step + "violation flag");
      outcomes.push_back(o);
    }
    c.check(trace.steps[2].outcome.reconstruction == sent("I will always be with you"), tag + "step 3 x_hat");

    const EpisodeScore s = score_episode(x, outcomes, cfg, lm);
    c.check(s.t_final == 3 && s.violated, tag + "T = 3 with violation");
    c.near(s.r_sa, 0.20, tol, tag + "r_SA");
    c.near(s.r_sr[2], -1.0, tol, tag + "step 3 r_SR override");
    c.near(s.rewards[2], -0.80, tol, tag + "step 3 total reward");
    // Formula mode: r_C = 1 - |y_t| / |y_(t-1)|, i.e. 1 - 5/6 then 1 - 4/5.
    const double r_sr[] = {unit ? 1.0 : 1.0 / 6.0, unit ? 1.0 : 1.0 / 5.0};
    for (std::size_t k = 0; k < 2; ++k) {
      c.near(s.r_sr[k], r_sr[k], tol, tag + "step " + std::to_string(k + 1) + " r_SR");
      c.near(s.rewards[k], r_sr[k] + 0.20, tol, tag + "step " + std::to_string(k + 1) + " total reward");
    }
    const auto experiences = make_experiences(trace, s, 0);
    c.check(experiences.size() == 3, tag + "no experiences for steps 4-6");
    if (unit) c.note("unit r_SR 1.0, total 1.2");
  }
  c.note("formula r_SR 0.1667, 0.2000");
}

// ---------------------------------------------------------------- 2

void gradients(Criterion& c) {
  const auto start = Clock::now();
  double worst_net = 0.0, worst_loss = 0.0;
  const double h = 1e-6;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(1000 + seed);
    // Q-network alone: objective g . Q(s).
    AgentParams agent = random_agent(4, {7, 5}, rng);
    const Vector s = random_vector(8, rng);
    const Vector g = random_vector(3, rng);
    const nn::BackwardResult back = agent.net.backward(s, g);
    auto objective = [&](const nn::DenseNet& net) {
      const auto q = net.forward(s);
      return g[0] * q[0] + g[1] * q[1] + g[2] * q[2];
    };
    auto blocks = agent.net.parameter_blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (std::size_t k = 0; k < blocks[b].size(); ++k) {
        const double saved = blocks[b][k];
        blocks[b][k] = saved + h;
        const double up = objective(agent.net);
        blocks[b][k] = saved - h;
        const double down = objective(agent.net);
        blocks[b][k] = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(back.params[b][k]), 1e-3});
        worst_net = std::max(worst_net, std::abs(numeric - back.params[b][k]) / scale);
      }
    }

    // Full DQN loss through the network and the encoder bias vectors.
    const AgentParams target = random_agent(4, {7, 5}, rng);
    const auto batch = random_experiences(5, 4, rng);
    std::vector<const Experience*> ptrs;
    for (const auto& e : batch) ptrs.push_back(&e);
    worst_loss = std::max(worst_loss, dqn_gradient_error(agent, target, ptrs, 0.995, h));
  }
  const double elapsed = seconds_since(start);
  c.check(worst_net < 1e-4, "Q-network worst relative error " + fmt(worst_net, 8));
  c.check(worst_loss < 1e-4, "DQN loss worst relative error " + fmt(worst_loss, 8));
  c.check(elapsed < 10.0, "runtime " + fmt(elapsed, 2) + "s exceeds 10s");
  c.note("25 seeds, worst rel. error net " + fmt(worst_net, 8) + ", loss " + fmt(worst_loss, 8));
}

// ---------------------------------------------------------------- 3

void converter_invariants(Criterion& c, const MaskedLM& lm, const std::vector<Sentence>& pool) {
  const auto start = Clock::now();
  Rng rng(33);
  for (int trial = 0; trial < 1000; ++trial) {
    const Sentence& x = pool[rng.uniform_index(pool.size())];
    const std::size_t n = x.size();
    std::vector<EditAction> a(n);
    std::size_t removed = 0;
    for (auto& act : a) {
      act = kAllActions[rng.uniform_index(3)];
      removed += act == EditAction::kRemove;
    }
    const Sentence y = compress(x, a, lm);
    const Skeleton z = make_skeleton(x, a);
    const Sentence x_hat = reconstruct(y, z, a, lm);
    const std::string id = "trial " + std::to_string(trial);
    c.check(y.size() == n - removed, id + ": |y| != N - #Remove");
    c.check(x_hat.size() == n, id + ": |x_hat| != N");
    if (y.size() != n - removed || x_hat.size() != n) continue;
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] == EditAction::kKeep) {
        c.check(y[j] == x[i], id + ": Keep word changed in y");
        c.check(x_hat[i] == x[i], id + ": Keep word changed in x_hat");
      }
      if (a[i] != EditAction::kRemove) ++j;
    }
    c.check(compress(x, a, lm) == y && reconstruct(y, z, a, lm) == x_hat, id + ": repeated call differs");
  }
  const double elapsed = seconds_since(start);
  c.check(elapsed < 30.0, "runtime " + fmt(elapsed, 2) + "s exceeds 30s");
  c.note("1000 pairs");
}

// ---------------------------------------------------------------- 4

void fill_oracle(Criterion& c, const MaskedLM& lm, const std::vector<Sentence>& pool) {
  const std::size_t v = lm.vocabulary().size();
  // Independent argmax: first maximum scanning ids upward.
  auto best = [&](const MaskedSequence& seq, std::size_t pos) {
    const Vector p = lm.probabilities(seq, pos);
    std::size_t arg = 0;
    for (std::size_t id = 1; id < v; ++id) {
      if (p[id] > p[arg]) arg = id;
    }
    return std::pair<int, double>(static_cast<int>(arg), p[arg]);
  };

  Rng rng(44);
  std::size_t iterations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Sentence& x = pool[rng.uniform_index(pool.size())];
    MaskedSequence seq = MaskedSequence::from(x);
    if (rng.uniform() < 0.5) seq.prefix = pool[rng.uniform_index(pool.size())];
    const std::size_t masks = std::min<std::size_t>(x.size(), 2 + rng.uniform_index(4));
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    for (std::size_t k = 0; k < masks; ++k) seq.body[order[k]] = Slot::mask();

    MaskedSequence replay = seq;
    std::size_t seen = 0;
    const std::string id = "trial " + std::to_string(trial);
    const Sentence out = lm.fill_masks(seq, [&](const MaskedSequence& before, std::size_t position, int word,
                                                double prob) {
      ++seen;
      ++iterations;
      c.check(before.body[position].is_mask(), id + ": committed a non-mask");
      for (std::size_t j : before.mask_positions()) {
        const auto [w, p] = best(before, j);
        c.check(p <= prob + 1e-15, id + ": a remaining mask had a more confident best word");
        if (j == position) c.check(w == word && std::abs(p - prob) <= 1e-15, id + ": committed word is not the argmax");
      }
      // The observer's state must match an independent replay of the commits.
      c.check(body_key(before) == body_key(replay), id + ": state diverged from replay");
      replay.body[position] = Slot::of(lm.vocabulary().token_for_id(word));
    });
    c.check(seen == masks, id + ": one commit per mask");
    c.check(out.size() == x.size(), id + ": output length");
    Sentence expected;
    for (const auto& slot : replay.body) expected.tokens.push_back(*slot.word);
    c.check(out == expected, id + ": output differs from the replayed commits");
  }

  const Sentence s = pool.front();
  c.check(lm.fill_masks(MaskedSequence::from(s)) == s, "zero-mask input changed");
  MaskedSequence one = MaskedSequence::from(s);
  one.body[1] = Slot::mask();
  const Sentence filled = lm.fill_masks(one);
  c.check(filled[1].surface == lm.vocabulary().word(best(one, 1).first), "single mask not filled with the argmax");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != 1) c.check(filled[i] == s[i], "single mask changed another position");
  }
  c.note("200 inputs, " + std::to_string(iterations) + " fill iterations");
}

// ---------------------------------------------------------------- 5

struct PipelineData {
  Config cfg;
  std::vector<Sentence> train;
  std::vector<Sentence> heldout;
};

void training_smoke(Criterion& c, const PipelineData& data, const NGramMaskedLM& lm) {
  const auto start = Clock::now();
  const TrainingResult result = train(data.train, lm, data.cfg.trainer);
  const double train_seconds = seconds_since(start);

  // (a) checkpoint quartiles.
  const auto& cps = result.checkpoints;
  const std::size_t q = std::max<std::size_t>(1, cps.size() / 4);
  double first = 0.0, last = 0.0;
  for (std::size_t k = 0; k < q; ++k) {
    first += cps[k].mean_reward / static_cast<double>(q);
    last += cps[cps.size() - 1 - k].mean_reward / static_cast<double>(q);
  }
  c.check(last > first, "(a) last-quartile mean reward " + fmt(last) + " does not exceed first " + fmt(first));

  // (b) greedy episodes of the selected model on held-out sentences.
  std::size_t clean = 0;
  for (const auto& x : data.heldout) {
    const ActionTrace trace = run_episode(
        x, result.selected, lm, data.cfg.trainer.reward,
        [](std::span<const QValues> qv, const std::vector<bool>& operated) { return select_greedy(qv, operated); });
    const bool violated = std::any_of(trace.steps.begin(), trace.steps.end(),
                                      [](const TraceStep& s) { return s.outcome.violated; });
    if (!violated) ++clean;
  }
  const double clean_share = static_cast<double>(clean) / static_cast<double>(data.heldout.size());
  c.check(clean_share >= 0.5, "(b) violation-free greedy episodes " + fmt(clean_share) + " < 0.5");

  // (c) inference step optimality, with cr recomputed from the summaries.
  RewardConfig inference = data.cfg.trainer.reward;
  inference.rr_mode = RrMode::kExact;
  std::size_t checked = 0;
  for (const auto& x : data.heldout) {
    const SummaryResult r = summarize(x, result.selected, lm, inference);
    std::vector<double> score{1.0};
    for (const auto& step : r.trace.steps) score.push_back(compression_rate(x, step.outcome.summary) + step.outcome.rr);
    const double chosen = score[r.t_star];
    for (double s : score) c.check(chosen >= s, "(c) t* not optimal on '" + x.text() + "'");
    const Sentence& expected = r.t_star == 0 ? x : r.trace.steps[r.t_star - 1].outcome.summary;
    c.check(r.summary == expected, "(c) emitted summary is not y at t*");
    ++checked;
  }
  const double elapsed = seconds_since(start);
  c.check(elapsed < 900.0, "runtime " + fmt(elapsed, 1) + "s exceeds 15 min");
  c.note(std::to_string(data.cfg.trainer.episodes) + " episodes in " + fmt(train_seconds, 1) + "s");
  c.note("quartile rewards " + fmt(first) + " -> " + fmt(last));
  c.note("violation-free " + std::to_string(clean) + "/" + std::to_string(data.heldout.size()));
  c.note("t* checked on " + std::to_string(checked));
}

// ---------------------------------------------------------------- 6

void evaluation_oracle(Criterion& c) {
  c.near(rouge_n(sent("the cat sat"), std::vector<Sentence>{sent("the cat")}, 1).f1, 0.8, 1e-12, "ROUGE-1 F1");
  c.near(rouge_l(sent("a c b"), std::vector<Sentence>{sent("a b c")}).f1, 2.0 / 3.0, 1e-12, "ROUGE-L F1");
  const Sentence same = sent("officials said the plan would cut costs");
  const std::vector<Sentence> self{same};
  c.near(rouge_n(same, self, 1).f1, 1.0, 1e-12, "identical ROUGE-1");
  c.near(rouge_n(same, self, 2).f1, 1.0, 1e-12, "identical ROUGE-2");
  c.near(rouge_l(same, self).f1, 1.0, 1e-12, "identical ROUGE-L");

  static const char* pieces[] = {"a", "Z", "é", "ß", "中", "文", "😀", "ю", "ñ", "∑", "7"};
  Rng rng(66);
  std::size_t max_bytes = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    Sentence s;
    const std::size_t n = rng.uniform_index(40);
    for (std::size_t k = 0; k < n; ++k) {
      std::string w;
      const std::size_t len = 1 + rng.uniform_index(8);
      for (std::size_t j = 0; j < len; ++j) w += pieces[rng.uniform_index(std::size(pieces))];
      s.tokens.push_back(Token{w});
    }
    const std::size_t bytes = byte_cap(s, 75).text().size();
    max_bytes = std::max(max_bytes, bytes);
    c.check(bytes <= 75, "byte_cap produced " + std::to_string(bytes) + " bytes");
  }

  std::size_t nw = 0, sentences = 0;
  for (const char* name : {"toy_train.txt", "toy_heldout.txt", "toy_heldout.ref"}) {
    for (const auto& x : read_lines(data_path(name))) {
      if (x.empty()) continue;
      nw += count_new_words(x, lead_n(x, 8));
      ++sentences;
    }
  }
  c.check(nw == 0, "Lead-8 produced new words");
  c.note("byte_cap max " + std::to_string(max_bytes) + " bytes over 2000 fuzzed inputs");
  c.note("Lead-8 NW 0 on " + std::to_string(sentences) + " sentences");
}

// ---------------------------------------------------------------- 7

void schedule_properties(Criterion& c) {
  ReplayBuffer buffer(2000);
  for (int k = 0; k < 2600; ++k) {
    Experience e;
    e.reward = k;
    buffer.push(std::move(e));
  }
  c.check(buffer.size() == 2000, "buffer size at capacity");
  bool fifo = true;
  for (std::size_t i = 0; i < buffer.size(); ++i) fifo &= buffer[i].reward == static_cast<double>(600 + i);
  c.check(fifo, "buffer keeps the 2000 newest experiences in insertion order");

  c.check(epsilon_at(0) == 0.9, "epsilon_at(0) == 0.9");
  double prev = epsilon_at(0);
  bool monotone = true, floored = true;
  for (std::size_t u = 1; u <= 200000; ++u) {
    const double e = epsilon_at(u);
    monotone &= e <= prev;
    floored &= e >= 0.03;
    prev = e;
  }
  c.check(monotone, "epsilon non-increasing");
  c.check(floored && prev == 0.03, "epsilon floor 0.03");

  Rng rng(77);
  const AgentParams target = random_agent(4, {6}, rng);
  bool exact = true;
  for (int k = 0; k < 100; ++k) {
    Experience e;
    e.state = random_context(4, rng);
    e.reward = rng.uniform(-5.0, 5.0);
    exact &= td_target(e, target, 0.995) == e.reward;
  }
  c.check(exact, "terminal td_target == r");
}

// ---------------------------------------------------------------- 8

int cli(std::vector<std::string> args, std::string& err_text) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  err_text = err.str();
  return code;
}

void pipeline_determinism(Criterion& c, double smoke_seconds) {
  const auto start = Clock::now();
  TempDir dir("acceptance");
  const std::string train = data_path("toy_train.txt").string();
  const std::string heldout = data_path("toy_heldout.txt").string();
  const std::string refs = data_path("toy_heldout.ref").string();
  const std::string stop = data_path("stopwords.txt").string();
  const char* files[] = {"lm.txt", "agent.txt", "train.log", "summaries.txt", "report.txt"};

  for (const char* run : {"a", "b"}) {
    const auto root = dir / run;
    std::filesystem::create_directories(root);
    auto at = [&](const char* name) { return (root / name).string(); };
    std::string err;
    const int codes[] = {
        cli({"lm-train", "--corpus", train, "--out", at("lm.txt"), "--stopwords", stop, "--seed", "1"}, err),
        cli({"train", "--corpus", train, "--lm", at("lm.txt"), "--out", at("agent.txt"), "--log", at("train.log"),
             "--seed", "1"},
            err),
        cli({"summarize", "--model", at("agent.txt"), "--lm", at("lm.txt"), "--input", heldout, "--output",
             at("summaries.txt")},
            err),
        cli({"evaluate", "--candidates", at("summaries.txt"), "--sources", heldout, "--references", refs, "--out",
             at("report.txt")},
            err),
    };
    for (int code : codes) c.check(code == 0, std::string("run ") + run + ": command failed: " + err);
  }
  for (const char* name : files) {
    const std::string a = slurp(dir / "a" / name), b = slurp(dir / "b" / name);
    c.check(!a.empty(), std::string(name) + " is empty");
    c.check(a == b, std::string(name) + " differs between runs");
  }
  const double pipeline = seconds_since(start);
  const double total = pipeline + smoke_seconds;
  c.check(total < 1200.0, "runtime with criterion 5 " + fmt(total, 1) + "s exceeds 20 min");
  c.note("two runs in " + fmt(pipeline, 1) + "s, with criterion 5 " + fmt(total, 1) + "s");
}

}  // namespace

int main() {
  const auto suite_start = Clock::now();

  // Reference LM and data exactly as the CLI pipeline builds them.
  PipelineData data;
  data.cfg = resolve_config(std::nullopt);
  const auto lm_corpus =
      load_corpus(data_path("toy_train.txt"), data.cfg.max_len, data.cfg.sample_size, data.cfg.trainer.seed);
  const NGramMaskedLM lm = train_lm(lm_corpus, data.cfg.lm, data.cfg.min_freq, data_path("stopwords.txt"),
                                    data.cfg.rare_cutoff);
  data.train = lm_corpus;
  for (auto& s : data.train) lm.vocabulary().annotate(s);
  for (auto& s : read_lines(data_path("toy_heldout.txt"))) {
    if (s.empty()) continue;
    lm.vocabulary().annotate(s);
    data.heldout.push_back(std::move(s));
  }
  std::vector<Sentence> pool = data.train;
  pool.insert(pool.end(), data.heldout.begin(), data.heldout.end());

  report(1, "reward table reproduction", reward_table);
  report(2, "gradient correctness", gradients);
  report(3, "converter invariants", [&](Criterion& c) { converter_invariants(c, lm, pool); });
  report(4, "autoregressive fill oracle", [&](Criterion& c) { fill_oracle(c, lm, pool); });
  double smoke_seconds = 0.0;
  report(5, "training smoke", [&](Criterion& c) {
    const auto start = Clock::now();
    training_smoke(c, data, lm);
    smoke_seconds = seconds_since(start);
  });
  report(6, "evaluation oracle", evaluation_oracle);
  report(7, "replay and schedule properties", schedule_properties);
  report(8, "end-to-end determinism",
         [&](Criterion& c) { pipeline_determinism(c, smoke_seconds); });

  std::cout << (g_failed == 0 ? "all criteria passed" : std::to_string(g_failed) + " criteria failed") << " in "
            << fmt(seconds_since(suite_start), 1) << "s\n";
  return g_failed == 0 ? 0 : 1;
}
