#include "ealm/reward.hpp"

#include <cmath>
#include <string>

#include "ealm/errors.hpp"

namespace ealm {

namespace {

void require_unit_interval(double value, const char* key) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ConfigError(std::string(key) + " must be in [0, 1], got " + std::to_string(value));
  }
}

}  // namespace

void RewardConfig::validate() const {
  require_unit_interval(tau, "tau");
  require_unit_interval(rho, "rho");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (rr_topk < 1) throw ConfigError("rr_topk must be >= 1");
  if (llh_mode == LlhMode::kGeometric && !(llh_threshold > 0.0 && llh_threshold <= 1.0)) {
    throw ConfigError("llh_threshold must be in (0, 1]");
  }
}

double compression_rate(const Sentence& x, const Sentence& y) {
  if (x.empty()) throw UsageError("compression_rate: empty input");
  return 1.0 - static_cast<double>(y.size()) / static_cast<double>(x.size());
}

double reconstruction_rate_exact(const Sentence& x, const Sentence& x_hat) {
  if (x.size() != x_hat.size()) throw UsageError("reconstruction_rate: length mismatch");
  if (x.empty()) throw UsageError("reconstruction_rate: empty input");
  std::size_t matched = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].surface == x_hat[i].surface) ++matched;
  }
  return static_cast<double>(matched) / static_cast<double>(x.size());
}

double reconstruction_rate_relaxed(const Sentence& x, const Sentence& summary,
                                   const Skeleton& skeleton, std::span<const EditAction> actions,
                                   const MaskedLM& lm, std::size_t k) {
  if (k < 1) throw UsageError("reconstruction_rate_relaxed: k must be >= 1");
  if (skeleton.size() != x.size() || actions.size() != x.size()) {
    throw UsageError("reconstruction_rate_relaxed: length mismatch");
  }
  const Vocabulary& vocab = lm.vocabulary();
  const MaskedSequence input = reconstruction_input(summary, skeleton);
  std::size_t content = 0;
  std::size_t recovered = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (vocab.is_stopword(x[i].surface)) continue;
    ++content;
    if (actions[i] == EditAction::kKeep) {
      ++recovered;
      continue;
    }
    // An unknown surface form cannot be regenerated.
    const int gold = vocab.id(x[i].surface);
    if (gold == Vocabulary::kUnknownId) continue;
    if (lm.predict(input, i).in_top_k(gold, k)) ++recovered;
  }
  if (content == 0) return 1.0;
  return static_cast<double>(recovered) / static_cast<double>(content);
}

double tau_at(std::size_t t, double tau, std::size_t n) {
  if (n == 0 || t > n) throw UsageError("tau_at: need 0 <= t <= N, N >= 1");
  return 1.0 - static_cast<double>(t) * (1.0 - tau) / static_cast<double>(n);
}

double rho_at(std::size_t t, double rho, std::size_t n) {
  if (n == 0 || t > n) throw UsageError("rho_at: need 0 <= t <= N, N >= 1");
  return static_cast<double>(t) * rho / static_cast<double>(n);
}

double step_reward(std::size_t summary_len, std::size_t prev_summary_len, double rr_t, double tau_t,
                   StepRewardMode mode) {
  if (prev_summary_len == 0) throw UsageError("step_reward: previous summary is empty");
  double r_c = 0.0;
  if (mode == StepRewardMode::kFormula) {
    r_c = 1.0 - static_cast<double>(summary_len) / static_cast<double>(prev_summary_len);
  } else if (summary_len < prev_summary_len) {
    r_c = 1.0;
  }
  const double r_r = rr_t > tau_t ? 1.0 : -1.0;
  return r_c * r_r;
}

bool check_violation(double cr_t, double rr_t, double rho_t, double tau_t) {
  return !(cr_t > rho_t) || !(rr_t > tau_t);
}

double summary_assessment(std::size_t t_final, std::size_t n, double cr, double rr, double sim_xy,
                          double llh_y, double alpha, double beta) {
  if (n == 0 || t_final < 1 || t_final > n) throw UsageError("summary_assessment: need 1 <= T <= N");
  const double progress = static_cast<double>(t_final) / static_cast<double>(n);
  return progress * (cr * rr + alpha * sim_xy + beta * llh_y);
}

StepOutcome evaluate_step(const Sentence& x, const std::vector<EditAction>& actions, std::size_t t,
                          std::size_t index, EditAction action, std::size_t prev_summary_len,
                          const Conversion& conversion, const RewardConfig& cfg, const MaskedLM& lm) {
  const std::size_t n = x.size();
  StepOutcome out;
  out.t = t;
  out.index = index;
  out.action = action;
  out.summary = conversion.summary;
  out.reconstruction = conversion.reconstruction;
  out.cr = compression_rate(x, conversion.summary);
  if (cfg.rr_mode == RrMode::kExact) {
    out.rr = reconstruction_rate_exact(x, conversion.reconstruction);
  } else {
    out.rr = reconstruction_rate_relaxed(x, conversion.summary, make_skeleton(x, actions), actions, lm,
                                         cfg.rr_topk);
  }
  out.tau_t = tau_at(t, cfg.tau, n);
  out.rho_t = rho_at(t, cfg.rho, n);
  out.r_sr = step_reward(conversion.summary.size(), prev_summary_len, out.rr, out.tau_t,
                         cfg.step_reward_mode);
  out.violated = check_violation(out.cr, out.rr, out.rho_t, out.tau_t);
  return out;
}

EpisodeScore score_steps(std::span<const StepOutcome> steps, std::size_t n, double sim_xy,
                         double llh_y, const RewardConfig& cfg) {
  if (steps.empty()) throw UsageError("score_episode: no steps recorded");
  EpisodeScore score;
  score.t_final = steps.size();
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k].violated) {
      score.t_final = k + 1;
      score.violated = true;
      break;
    }
  }
  const StepOutcome& last = steps[score.t_final - 1];
  score.sim = sim_xy;
  score.llh = llh_y;
  score.r_sa = summary_assessment(score.t_final, n, last.cr, last.rr, sim_xy, llh_y, cfg.alpha, cfg.beta);
  for (std::size_t k = 0; k < score.t_final; ++k) {
    const bool penalized = score.violated && k + 1 == score.t_final;
    const double r_sr = penalized ? -1.0 : steps[k].r_sr;
    score.r_sr.push_back(r_sr);
    score.rewards.push_back(r_sr + score.r_sa);
  }
  return score;
}

EpisodeScore score_episode(const Sentence& x, std::span<const StepOutcome> steps,
                           const RewardConfig& cfg, const MaskedLM& lm) {
  if (steps.empty()) throw UsageError("score_episode: no steps recorded");
  std::size_t t_final = steps.size();
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k].violated) {
      t_final = k + 1;
      break;
    }
  }
  const Sentence& y = steps[t_final - 1].summary;
  const double sim_xy = sim(lm, x, y);
  const double llh_y = llh(lm, y, cfg.llh_threshold, cfg.llh_mode);
  return score_steps(steps, x.size(), sim_xy, llh_y, cfg);
}

}  // namespace ealm
