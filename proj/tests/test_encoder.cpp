#include <doctest.h>

#include <cmath>
#include <memory>

#include "ealm/encoder.hpp"
#include "ealm/errors.hpp"
#include "ealm/random.hpp"
#include "fixtures.hpp"

using namespace ealm;
using ealm::testing::sent;

namespace {

Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

EncoderParams random_params(std::size_t d, Rng& rng) {
  EncoderParams p = EncoderParams::zeros(d);
  for (auto& b : p.action_bias) b = random_vector(d, rng);
  for (auto& b : p.status_bias) b = random_vector(d, rng);
  return p;
}

}  // namespace

TEST_CASE("edit actions") {
  CHECK(ordinal(EditAction::kRemove) == 0);
  CHECK(ordinal(EditAction::kKeep) == 1);
  CHECK(ordinal(EditAction::kReplace) == 2);
  for (EditAction a : kAllActions) CHECK(parse_action(to_string(a)) == a);
  CHECK_FALSE(parse_action("Delete").has_value());
}

TEST_CASE("edit state bookkeeping") {
  EditState s(3);
  CHECK(s.actions() == std::vector<EditAction>(3, EditAction::kKeep));
  CHECK(s.step() == 0);
  s.commit(2, EditAction::kRemove);
  s.commit(0, EditAction::kReplace);
  CHECK(s.step() == 2);
  CHECK(s.operated(2));
  CHECK_FALSE(s.operated(1));
  CHECK(s.actions()[2] == EditAction::kRemove);
  CHECK_THROWS_AS(s.commit(2, EditAction::kKeep), UsageError);
  CHECK_THROWS_AS(s.commit(3, EditAction::kKeep), UsageError);
  s.commit(1, EditAction::kKeep);
  CHECK(s.finished());
}

TEST_CASE("token embeddings are per type and deterministic") {
  const auto lm = ealm::testing::toy_lm(16);
  const Sentence x = sent("police said that police zzzunknown said zzzunknown");
  const Embeddings e = token_embeddings(x, lm);
  REQUIRE(e.size() == x.size());
  CHECK(e[0] == e[3]);
  CHECK(e[1] == e[5]);
  CHECK(e[4] == e[6]);
  CHECK(e[4] == hashed_embedding("zzzunknown", 16));
  CHECK(e[4] != hashed_embedding("zzzother", 16));
  CHECK(e[0] == lm.embed_word(lm.vocabulary().make_token("police")));
  CHECK(token_embeddings(x, lm) == e);
  double norm = 0.0;
  for (double v : e[4]) norm += v * v;
  CHECK(norm == doctest::Approx(1.0));
}

TEST_CASE("local encoding") {
  Rng rng(2);
  const EncoderParams zero = EncoderParams::zeros(4);
  const Vector e = random_vector(4, rng);
  CHECK(local_encoding(e, EditAction::kRemove, true, zero) == e);

  const EncoderParams p = random_params(4, rng);
  const Vector off = local_encoding(e, EditAction::kReplace, false, p);
  const Vector on = local_encoding(e, EditAction::kReplace, true, p);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(on[k] - off[k] == doctest::Approx(p.status_bias[1][k] - p.status_bias[0][k]));
    CHECK(off[k] == doctest::Approx(e[k] + p.action_bias[2][k] + p.status_bias[0][k]));
  }
  CHECK_THROWS_AS(local_encoding(Vector(3), EditAction::kKeep, false, p), UsageError);
}

TEST_CASE("global encoding") {
  SUBCASE("single position attends to itself") {
    const std::vector<Vector> l{{0.3, -0.2}};
    CHECK(global_encoding(l, 0) == l[0]);
  }
  SUBCASE("zero query falls back to uniform weights") {
    const std::vector<Vector> l{{0.0, 0.0}, {1.0, 2.0}, {-3.0, 1.0}};
    const Vector g = global_encoding(l, 0);
    CHECK(g[0] == doctest::Approx(-2.0 / 3.0));
    CHECK(g[1] == doctest::Approx(1.0));
  }
  SUBCASE("weights are a probability vector and match a direct recomputation") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 1 + rng.uniform_index(8);
      std::vector<Vector> l;
      for (std::size_t j = 0; j < n; ++j) l.push_back(random_vector(5, rng));
      const std::size_t i = rng.uniform_index(n);
      const Vector w = attention_weights(l, i);
      double total = 0.0, z = 0.0;
      std::vector<double> raw(n);
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < 5; ++k) dot += l[i][k] * l[j][k];
        raw[j] = std::max(0.0, dot);
        z += raw[j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(w[j] >= 0.0);
        CHECK(w[j] == doctest::Approx(raw[j] / z).epsilon(1e-12));
        total += w[j];
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("encode_all") {
  const auto lm = ealm::testing::toy_lm(8);
  const Sentence x = sent("police said monday that exports had collapsed .");
  const Embeddings e = token_embeddings(x, lm);
  const EncoderParams zero = EncoderParams::zeros(8);

  EditState edit(x.size());
  const auto states = encode_all(e, edit, zero);
  REQUIRE(states.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(states[i].values.size() == 16);
    CHECK(Vector(states[i].local().begin(), states[i].local().end()) == e[i]);
    CHECK(Vector(states[i].global().begin(), states[i].global().end()) == global_encoding(e, i));
  }

  Rng rng(5);
  const EncoderParams p = random_params(8, rng);
  const auto before = encode_all(e, edit, p);
  edit.commit(3, EditAction::kRemove);
  const auto after = encode_all(e, edit, p);
  CHECK(after[3].values != before[3].values);
  CHECK(Vector(after[0].local().begin(), after[0].local().end()) ==
        Vector(before[0].local().begin(), before[0].local().end()));
  CHECK(encode_all(e, edit, p)[5].values == after[5].values);

  const Embeddings single{e[0]};
  const auto one = encode_all(single, EditState(1), zero);
  CHECK(Vector(one[0].global().begin(), one[0].global().end()) == e[0]);
}

TEST_CASE("encode_state agrees with encode_all") {
  const auto lm = ealm::testing::toy_lm(8);
  const Sentence x = sent("the army said tuesday that food prices could fall further .");
  auto e = std::make_shared<const Embeddings>(token_embeddings(x, lm));
  Rng rng(6);
  const EncoderParams p = random_params(8, rng);
  EditState edit(x.size());
  edit.commit(4, EditAction::kReplace);
  edit.commit(1, EditAction::kRemove);
  const auto all = encode_all(*e, edit, p);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const StateContext ctx{e, edit.actions(), edit.statuses(), i};
    CHECK(encode_state(ctx, p).values == all[i].values);
  }
}

TEST_CASE("bias gradients match central finite differences") {
  const double h = 1e-6;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    Rng rng(50 + seed);
    const std::size_t n = 1 + rng.uniform_index(6), d = 4;
    Embeddings e;
    for (std::size_t j = 0; j < n; ++j) e.push_back(random_vector(d, rng));
    EncoderParams p = random_params(d, rng);
    for (auto& b : p.action_bias) {
      for (double& v : b) v *= 0.3;
    }
    std::vector<EditAction> actions(n);
    std::vector<bool> statuses(n);
    for (std::size_t j = 0; j < n; ++j) {
      actions[j] = kAllActions[rng.uniform_index(3)];
      statuses[j] = rng.uniform() < 0.5;
    }
    const StateContext ctx{std::make_shared<const Embeddings>(e), actions, statuses, rng.uniform_index(n)};
    const Vector upstream = random_vector(2 * d, rng);
    auto objective = [&](const EncoderParams& q) {
      const StateVector s = encode_state(ctx, q);
      double acc = 0.0;
      for (std::size_t k = 0; k < s.values.size(); ++k) acc += upstream[k] * s.values[k];
      return acc;
    };

    nn::GradientBlocks grads = p.zero_gradients();
    encode_state_backward(ctx, p, upstream, grads);
    auto blocks = p.parameter_blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (std::size_t k = 0; k < d; ++k) {
        const double saved = blocks[b][k];
        blocks[b][k] = saved + h;
        const double up = objective(p);
        blocks[b][k] = saved - h;
        const double down = objective(p);
        blocks[b][k] = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(grads[b][k]), 1e-3});
        CHECK(std::abs(numeric - grads[b][k]) / scale < 1e-4);
      }
    }
  }
}
