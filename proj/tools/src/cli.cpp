#include "ealm/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "ealm/config.hpp"
#include "ealm/corpus.hpp"
#include "ealm/errors.hpp"
#include "ealm/infer_eval.hpp"
#include "ealm/lm.hpp"
#include "ealm/trainer.hpp"

namespace ealm::cli {

namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void write_lines(const fs::path& path, const std::vector<Sentence>& lines) {
  std::ofstream out = open_output(path);
  for (const auto& s : lines) out << s.text() << '\n';
  if (!out) throw ConfigError("failed writing " + path.string());
}

void echo_config(std::ostream& err, const Config& cfg) {
  err << "# resolved configuration\n";
  write_config(err, cfg);
  err << "# end configuration\n";
}

/// Run k of n: the plain path for a single run, <stem>.run<k><ext> otherwise.
fs::path run_path(const fs::path& base, std::size_t k, std::size_t n) {
  if (n == 1) return base;
  fs::path p = base;
  p.replace_filename(base.stem().string() + ".run" + std::to_string(k) + base.extension().string());
  return p;
}

struct Overrides {
  std::optional<std::string> config;
  std::vector<std::string> assignments;  // --set key=value

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "key=value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--set", assignments, "override one configuration key (key=value), repeatable");
  }

  ConfigValues values() const {
    ConfigValues v;
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + a + "'");
      std::istringstream line(a);
      for (auto& [key, value] : parse_config(line, "--set")) v[key] = value;
    }
    return v;
  }
};

Config resolve(const Overrides& o, ConfigValues flags) {
  ConfigValues values = o.values();
  for (auto& [key, value] : flags) values[key] = value;
  return resolve_config(o.config ? std::optional<fs::path>(*o.config) : std::nullopt, values);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Edit-based unsupervised sentence summarization"};
  app.name("ealm");
  app.require_subcommand(1);

  // lm-train
  auto* lm_cmd = app.add_subcommand("lm-train", "train the reference n-gram masked LM");
  std::string lm_corpus, lm_out;
  std::optional<std::string> stopwords, lm_order, lm_smoothing, lm_seed;
  Overrides lm_over;
  lm_cmd->add_option("--corpus", lm_corpus, "one tokenized sentence per line")->required();
  lm_cmd->add_option("--out", lm_out, "output LM file")->required();
  lm_cmd->add_option("--order", lm_order, "n-gram order");
  lm_cmd->add_option("--smoothing", lm_smoothing, "add-k constant");
  lm_cmd->add_option("--seed", lm_seed, "corpus sampling seed");
  lm_cmd->add_option("--stopwords", stopwords, "stopword list, one per line")->check(CLI::ExistingFile);
  lm_over.attach(lm_cmd);

  // train
  auto* train_cmd = app.add_subcommand("train", "train the editing agent");
  std::string tr_corpus, tr_lm, tr_out;
  std::optional<std::string> tr_seed, tr_episodes, tr_log;
  std::size_t runs = 1;
  Overrides tr_over;
  train_cmd->add_option("--corpus", tr_corpus, "training sentences")->required();
  train_cmd->add_option("--lm", tr_lm, "LM file from lm-train")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", tr_out, "output agent file")->required();
  train_cmd->add_option("--seed", tr_seed, "seed for every stochastic component");
  train_cmd->add_option("--episodes", tr_episodes, "number of training episodes");
  train_cmd->add_option("--log", tr_log, "training log file");
  train_cmd->add_option("--runs", runs, "independent runs with seeds seed, seed+1, ...")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000}));
  tr_over.attach(train_cmd);

  // summarize
  auto* sum_cmd = app.add_subcommand("summarize", "summarize one sentence per line");
  std::string sum_model, sum_lm, sum_input, sum_output;
  sum_cmd->add_option("--model", sum_model, "agent file from train")->required()->check(CLI::ExistingFile);
  sum_cmd->add_option("--lm", sum_lm, "LM file")->required()->check(CLI::ExistingFile);
  sum_cmd->add_option("--input", sum_input, "input sentences")->required()->check(CLI::ExistingFile);
  sum_cmd->add_option("--output", sum_output, "output summaries")->required();
  std::string sum_rr = "exact";
  sum_cmd->add_option("--rr-mode", sum_rr, "reconstruction rate used to pick the output step")
      ->check(CLI::IsMember({"exact", "relaxed"}));

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "ROUGE-1/2/L, LEN and NW of a system output");
  std::string ev_candidates, ev_sources;
  std::vector<std::string> ev_references;
  std::size_t cap = 75;
  std::optional<std::string> ev_out;
  eval_cmd->add_option("--candidates", ev_candidates, "system summaries")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--sources", ev_sources, "input sentences")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--references", ev_references, "reference files, comma separated")
      ->required()
      ->delimiter(',')
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--cap", cap, "byte cap applied before ROUGE")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", ev_out, "also write the report to this file");

  // lead
  auto* lead_cmd = app.add_subcommand("lead", "Lead-N baseline");
  std::string lead_input, lead_output;
  std::size_t lead_words = 8;
  lead_cmd->add_option("--input", lead_input, "input sentences")->required()->check(CLI::ExistingFile);
  lead_cmd->add_option("--output", lead_output, "output summaries")->required();
  lead_cmd->add_option("--n", lead_words, "words to keep")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "ealm: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (lm_cmd->parsed()) {
      ConfigValues flags;
      if (lm_order) flags["lm_order"] = *lm_order;
      if (lm_smoothing) flags["lm_smoothing"] = *lm_smoothing;
      if (lm_seed) flags["seed"] = *lm_seed;
      const Config cfg = resolve(lm_over, flags);
      echo_config(err, cfg);
      const auto corpus = load_corpus(lm_corpus, cfg.max_len, cfg.sample_size, cfg.trainer.seed);
      const auto lm = train_lm(corpus, cfg.lm, cfg.min_freq,
                               stopwords ? std::optional<fs::path>(*stopwords) : std::nullopt, cfg.rare_cutoff);
      lm.save(fs::path(lm_out));
      err << "lm-train: " << corpus.size() << " sentences, vocabulary " << lm.vocabulary().size() << '\n';
    } else if (train_cmd->parsed()) {
      ConfigValues flags;
      if (tr_seed) flags["seed"] = *tr_seed;
      if (tr_episodes) flags["episodes"] = *tr_episodes;
      const Config base = resolve(tr_over, flags);
      const auto lm = NGramMaskedLM::load(fs::path(tr_lm));
      for (std::size_t k = 1; k <= runs; ++k) {
        Config cfg = base;
        cfg.trainer.seed = base.trainer.seed + (k - 1);
        echo_config(err, cfg);
        auto corpus = load_corpus(tr_corpus, cfg.max_len, cfg.sample_size, cfg.trainer.seed);
        for (auto& s : corpus) lm.vocabulary().annotate(s);
        const TrainingResult result = train(corpus, lm, cfg.trainer);
        save_agent(run_path(tr_out, k, runs), result.selected, cfg.trainer.reward);
        if (tr_log) {
          std::ofstream log = open_output(run_path(*tr_log, k, runs));
          write_training_log(log, result.log);
        }
        const auto& chosen = result.checkpoints[result.selected_checkpoint];
        err << "train: run " << k << " selected checkpoint at update " << chosen.update
            << " (mean buffer reward " << chosen.mean_reward << ")\n";
      }
    } else if (sum_cmd->parsed()) {
      const auto lm = NGramMaskedLM::load(fs::path(sum_lm));
      const AgentModel model = load_agent(fs::path(sum_model));
      RewardConfig reward = model.reward;
      reward.rr_mode = sum_rr == "exact" ? RrMode::kExact : RrMode::kRelaxed;
      std::vector<Sentence> summaries;
      for (auto& x : read_lines(sum_input)) {
        lm.vocabulary().annotate(x);
        summaries.push_back(x.empty() ? Sentence{} : summarize(x, model.params, lm, reward).summary);
      }
      write_lines(sum_output, summaries);
    } else if (eval_cmd->parsed()) {
      const auto candidates = read_lines(ev_candidates);
      const auto sources = read_lines(ev_sources);
      std::vector<std::vector<Sentence>> references;
      for (const auto& r : ev_references) references.push_back(read_lines(r));
      try {
        const EvalReport report = evaluate(candidates, sources, references, cap);
        write_report(out, report);
        if (ev_out) {
          std::ofstream file = open_output(*ev_out);
          write_report(file, report);
        }
      } catch (const ConfigError& e) {
        std::string files = ev_candidates + ", " + ev_sources;
        for (const auto& r : ev_references) files += ", " + r;
        throw ConfigError(std::string(e.what()) + " [" + files + "]");
      }
    } else if (lead_cmd->parsed()) {
      std::vector<Sentence> summaries;
      for (const auto& x : read_lines(lead_input)) summaries.push_back(x.empty() ? Sentence{} : lead_n(x, lead_words));
      write_lines(lead_output, summaries);
    }
  } catch (const std::exception& e) {
    err << "ealm: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace ealm::cli
