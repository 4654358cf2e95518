#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ealm/converter.hpp"
#include "ealm/corpus.hpp"
#include "ealm/encoder.hpp"
#include "ealm/lm.hpp"

namespace ealm {

enum class RrMode { kExact, kRelaxed };

/// kFormula: r_C = 1 - |y_t| / |y_{t-1}|. kUnit: r_C = 1 whenever the summary
/// got shorter (0 otherwise), the scale used by the worked reward table.
enum class StepRewardMode { kFormula, kUnit };

struct RewardConfig {
  double tau = 0.5;
  double rho = 0.3;
  double alpha = 0.1;
  double beta = 0.1;
  RrMode rr_mode = RrMode::kRelaxed;
  std::size_t rr_topk = 10;
  double llh_threshold = 0.005;
  LlhMode llh_mode = LlhMode::kGeometric;
  StepRewardMode step_reward_mode = StepRewardMode::kFormula;

  /// Throws ConfigError naming the first out-of-range field.
  void validate() const;
};

/// Everything recorded for one step t (1-based) of an episode.
struct StepOutcome {
  std::size_t t = 0;
  std::size_t index = 0;
  EditAction action = EditAction::kKeep;
  Sentence summary;
  Sentence reconstruction;
  double cr = 0.0;
  double rr = 0.0;
  double tau_t = 1.0;
  double rho_t = 0.0;
  double r_sr = 0.0;  // before any violation override
  bool violated = false;
};

/// cr = 1 - |y| / |x|.
double compression_rate(const Sentence& x, const Sentence& y);

/// Fraction of positions where x_hat reproduces x.
double reconstruction_rate_exact(const Sentence& x, const Sentence& x_hat);

/// Over non-stopword positions only: Keep positions count as recovered,
/// others count if x_i is among the LM's top-k at that position of the
/// reconstruction input (summary as prefix, every null slot masked).
/// All-stopword inputs score 1.0.
double reconstruction_rate_relaxed(const Sentence& x, const Sentence& summary,
                                   const Skeleton& skeleton, std::span<const EditAction> actions,
                                   const MaskedLM& lm, std::size_t k);

/// tau_(t) = 1 - t (1 - tau) / N.
double tau_at(std::size_t t, double tau, std::size_t n);
/// rho_(t) = t rho / N.
double rho_at(std::size_t t, double rho, std::size_t n);

/// r_SR = r_C * r_R with r_R = +1 if rr_t > tau_t else -1.
double step_reward(std::size_t summary_len, std::size_t prev_summary_len, double rr_t, double tau_t,
                   StepRewardMode mode = StepRewardMode::kFormula);

/// True iff cr_t <= rho_t or rr_t <= tau_t.
bool check_violation(double cr_t, double rr_t, double rho_t, double tau_t);

/// r_SA = (T/N) [cr rr + alpha sim + beta llh].
double summary_assessment(std::size_t t_final, std::size_t n, double cr, double rr, double sim_xy,
                          double llh_y, double alpha, double beta);

/// Computes cr, rr, the schedules, r_SR and the violation flag for step t
/// given the conversion produced by the action vector after that step.
StepOutcome evaluate_step(const Sentence& x, const std::vector<EditAction>& actions, std::size_t t,
                          std::size_t index, EditAction action, std::size_t prev_summary_len,
                          const Conversion& conversion, const RewardConfig& cfg, const MaskedLM& lm);

struct EpisodeScore {
  std::size_t t_final = 0;  // T
  bool violated = false;
  double sim = 0.0;
  double llh = 0.0;
  double r_sa = 0.0;
  std::vector<double> r_sr;     // steps 1..T, -1 at a violating step T
  std::vector<double> rewards;  // r_SR + r_SA for steps 1..T
};

/// Truncation at the first violation and reward assembly with externally
/// supplied sim / llh values for y_(T).
EpisodeScore score_steps(std::span<const StepOutcome> steps, std::size_t n, double sim_xy,
                         double llh_y, const RewardConfig& cfg);

/// As score_steps, computing sim(x, y_T) and llh(y_T) with the LM.
EpisodeScore score_episode(const Sentence& x, std::span<const StepOutcome> steps,
                           const RewardConfig& cfg, const MaskedLM& lm);

}  // namespace ealm
