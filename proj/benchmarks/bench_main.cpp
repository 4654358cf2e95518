#include <benchmark/benchmark.h>

#include <filesystem>

#include "ealm/agent.hpp"
#include "ealm/infer_eval.hpp"
#include "ealm/lm.hpp"
#include "ealm/trainer.hpp"

using namespace ealm;

namespace {

const std::filesystem::path kData = EALM_DATA_DIR;

const std::vector<Sentence>& corpus() {
  static const std::vector<Sentence> lines = read_lines(kData / "toy_train.txt");
  return lines;
}

const NGramMaskedLM& reference_lm() {
  static const NGramMaskedLM lm = train_lm(corpus(), NGramOptions{}, 1, kData / "stopwords.txt", 3);
  return lm;
}

MaskedSequence masked(std::size_t masks) {
  MaskedSequence seq = MaskedSequence::from(corpus()[0]);
  for (std::size_t i = 0; i < masks && i < seq.body.size(); ++i) seq.body[i * 2 % seq.body.size()] = Slot::mask();
  return seq;
}

void BM_LmPredict(benchmark::State& state) {
  const auto& lm = reference_lm();
  const MaskedSequence seq = masked(1);
  for (auto _ : state) benchmark::DoNotOptimize(lm.predict(seq, 0));
}
BENCHMARK(BM_LmPredict);

void BM_FillMasks(benchmark::State& state) {
  const auto& lm = reference_lm();
  const MaskedSequence seq = masked(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lm.fill_masks(seq));
}
BENCHMARK(BM_FillMasks)->Arg(1)->Arg(3)->Arg(6);

void BM_QForward(benchmark::State& state) {
  Rng rng(1);
  const std::size_t hidden[] = {200, 200};
  const AgentParams params = AgentParams::create(reference_lm().embedding_dim(), hidden, rng);
  StateVector s;
  s.values.assign(2 * params.embedding_dim(), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(q_values(params, s));
}
BENCHMARK(BM_QForward);

void BM_Update(benchmark::State& state) {
  const auto& lm = reference_lm();
  Rng rng(2);
  const std::size_t hidden[] = {200, 200};
  AgentParams params = AgentParams::create(lm.embedding_dim(), hidden, rng);
  const AgentParams target = params;
  ReplayBuffer buffer(2000);
  const RewardConfig reward;
  ExplorationPolicy policy{0.9, 0.5, EntropyMode::kNormalized};
  std::size_t episode = 0;
  while (buffer.size() < 128) {
    const Sentence& x = corpus()[episode % corpus().size()];
    const ActionTrace trace = run_episode(x, params, lm, reward, policy, rng);
    std::vector<StepOutcome> outcomes;
    for (const auto& step : trace.steps) outcomes.push_back(step.outcome);
    buffer.push_episode(make_experiences(trace, score_episode(x, outcomes, reward, lm), episode++));
  }
  std::vector<const Experience*> batch;
  for (std::size_t i : sample_batch(buffer, 128, rng)) batch.push_back(&buffer[i]);
  const TrainerConfig cfg;
  nn::AdamState adam(nn::AdamConfig{}, params.parameter_blocks());
  for (auto _ : state) benchmark::DoNotOptimize(update(params, target, batch, adam, cfg));
}
BENCHMARK(BM_Update)->Unit(benchmark::kMillisecond);

void BM_Episode(benchmark::State& state) {
  const auto& lm = reference_lm();
  Rng rng(3);
  const std::size_t hidden[] = {200, 200};
  const AgentParams params = AgentParams::create(lm.embedding_dim(), hidden, rng);
  const RewardConfig reward;
  for (auto _ : state) benchmark::DoNotOptimize(summarize(corpus()[1], params, lm, reward));
}
BENCHMARK(BM_Episode)->Unit(benchmark::kMillisecond);

void BM_Rouge(benchmark::State& state) {
  const std::vector<Sentence> refs{corpus()[0], corpus()[1]};
  const Sentence& cand = corpus()[2];
  for (auto _ : state) {
    benchmark::DoNotOptimize(rouge_n(cand, refs, 1));
    benchmark::DoNotOptimize(rouge_n(cand, refs, 2));
    benchmark::DoNotOptimize(rouge_l(cand, refs));
  }
}
BENCHMARK(BM_Rouge);

}  // namespace

BENCHMARK_MAIN();
