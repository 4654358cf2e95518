#include <doctest.h>

#include <sstream>

#include "ealm/cli.hpp"
#include "fixtures.hpp"

using ealm::testing::data_path;
using ealm::testing::slurp;
using ealm::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ealm::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == ealm::cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == ealm::cli::kExitUsage);
  const Result missing = run({"lead", "--output", "x.txt"});
  CHECK(missing.code == ealm::cli::kExitUsage);
  CHECK(missing.err.find("--input") != std::string::npos);
  CHECK(run({"lead", "--input", "/nonexistent/in.txt", "--output", "x"}).code == ealm::cli::kExitUsage);
  CHECK(run({"--help"}).code == ealm::cli::kExitOk);
}

TEST_CASE("lead and evaluate") {
  TempDir dir("cli");
  const auto input = dir.write("in.txt", "a b c d e f g h i j\n\nthe cat\n");
  const auto lead = dir / "lead.txt";
  REQUIRE(run({"lead", "--input", input.string(), "--output", lead.string(), "--n", "3"}).code == 0);
  CHECK(slurp(lead) == "a b c\n\nthe cat\n");

  const auto cands = dir.write("cands.txt", "the cat sat\na c b\n");
  const auto srcs = dir.write("srcs.txt", "the cat sat down\na b c d\n");
  const auto ref_a = dir.write("ref_a.txt", "the cat\na b c\n");
  const auto ref_b = dir.write("ref_b.txt", "the cat sat\nx\n");
  const auto report = dir / "report.txt";
  const Result r = run({"evaluate", "--candidates", cands.string(), "--sources", srcs.string(), "--references",
                        ref_a.string() + "," + ref_b.string(), "--out", report.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out == slurp(report));
  CHECK(r.out.find("rouge1_f1=0.900000") == std::string::npos);
  CHECK(r.out.find("rouge1_f1=1.000000") != std::string::npos);
  CHECK(r.out.find("sentences=2") != std::string::npos);

  const auto short_ref = dir.write("short.txt", "the cat\n");
  const Result bad = run({"evaluate", "--candidates", cands.string(), "--sources", srcs.string(), "--references",
                          short_ref.string()});
  CHECK(bad.code == ealm::cli::kExitFailure);
  CHECK(bad.err.find("short.txt") != std::string::npos);
  CHECK(bad.err.find("1 lines") != std::string::npos);
}

TEST_CASE("lm-train, train and summarize") {
  TempDir dir("cli");
  const auto lm = dir / "lm.txt";
  const auto model = dir / "agent.txt";
  const auto log = dir / "train.log";
  const auto out = dir / "summaries.txt";

  const Result lm_run = run({"lm-train", "--corpus", data_path("toy_train.txt").string(), "--out", lm.string(),
                             "--stopwords", data_path("stopwords.txt").string(), "--set", "embedding_dim=8"});
  REQUIRE(lm_run.code == 0);
  CHECK(lm_run.err.find("# resolved configuration") != std::string::npos);
  CHECK(lm_run.err.find("embedding_dim = 8") != std::string::npos);

  const Result tr = run({"train", "--corpus", data_path("toy_train.txt").string(), "--lm", lm.string(), "--out",
                         model.string(), "--episodes", "12", "--log", log.string(), "--set", "hidden_units=8",
                         "--set", "batch_size=4", "--set", "checkpoint_period=5"});
  REQUIRE(tr.code == 0);
  CHECK(slurp(model).rfind("EALM-AG1", 0) == 0);
  const std::string log_text = slurp(log);
  CHECK(std::count(log_text.begin(), log_text.end(), '\n') == 12);
  CHECK(tr.err.find("episodes = 12") != std::string::npos);

  const auto input = dir.write("in.txt", "police said monday that exports had collapsed .\n\n");
  REQUIRE(run({"summarize", "--model", model.string(), "--lm", lm.string(), "--input", input.string(), "--output",
               out.string()})
              .code == 0);
  const std::string summaries = slurp(out);
  CHECK(std::count(summaries.begin(), summaries.end(), '\n') == 2);
  CHECK(summaries.substr(summaries.size() - 2) == "\n\n");

  SUBCASE("rr mode for picking the output step") {
    CHECK(run({"summarize", "--model", model.string(), "--lm", lm.string(), "--input", input.string(), "--output",
               out.string(), "--rr-mode", "relaxed"})
              .code == 0);
    CHECK(run({"summarize", "--model", model.string(), "--lm", lm.string(), "--input", input.string(), "--output",
               out.string(), "--rr-mode", "fuzzy"})
              .code == ealm::cli::kExitUsage);
  }
  SUBCASE("multiple runs write numbered files") {
    REQUIRE(run({"train", "--corpus", data_path("toy_train.txt").string(), "--lm", lm.string(), "--out",
                 (dir / "m.txt").string(), "--episodes", "3", "--runs", "2", "--set", "hidden_units=4"})
                .code == 0);
    CHECK(std::filesystem::exists(dir / "m.run1.txt"));
    CHECK(std::filesystem::exists(dir / "m.run2.txt"));
  }
  SUBCASE("bad configuration is a runtime failure naming the key") {
    const Result bad = run({"train", "--corpus", data_path("toy_train.txt").string(), "--lm", lm.string(), "--out",
                            model.string(), "--set", "tau=2"});
    CHECK(bad.code == ealm::cli::kExitFailure);
    CHECK(bad.err.find("tau") != std::string::npos);
    const Result unknown = run({"train", "--corpus", data_path("toy_train.txt").string(), "--lm", lm.string(),
                                "--out", model.string(), "--set", "tua=2"});
    CHECK(unknown.code == ealm::cli::kExitFailure);
    CHECK(unknown.err.find("tua") != std::string::npos);
  }
}
