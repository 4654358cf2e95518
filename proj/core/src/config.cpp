#include "ealm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "ealm/errors.hpp"

namespace ealm {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, std::string_view expected) {
  throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as " + std::string(expected));
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) bad_value(key, value, "a number");
  return out;
}

std::size_t to_size(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "a non-negative integer");
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

template <class E>
struct EnumNames {
  std::vector<std::pair<E, std::string_view>> names;

  E parse(const std::string& key, const std::string& value) const {
    std::string choices;
    for (const auto& [e, n] : names) {
      if (n == value) return e;
      choices += (choices.empty() ? "" : "|") + std::string(n);
    }
    bad_value(key, value, "one of " + choices);
  }
  std::string print(E v) const {
    for (const auto& [e, n] : names) {
      if (e == v) return std::string(n);
    }
    return "?";
  }
};

const EnumNames<RrMode> kRrModes{{{RrMode::kExact, "exact"}, {RrMode::kRelaxed, "relaxed"}}};
const EnumNames<LlhMode> kLlhModes{{{LlhMode::kGeometric, "geometric"}, {LlhMode::kRaw, "raw"}}};
const EnumNames<StepRewardMode> kStepModes{
    {{StepRewardMode::kFormula, "formula"}, {StepRewardMode::kUnit, "unit"}}};
const EnumNames<EntropyMode> kEntropyModes{
    {{EntropyMode::kNormalized, "normalized"}, {EntropyMode::kLiteral, "literal"}}};
const EnumNames<nn::ClipMode> kClipModes{
    {{nn::ClipMode::kGlobalNorm, "global_norm"}, {nn::ClipMode::kPerValue, "per_value"}}};

struct Field {
  std::string key;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

template <class Get>
Field real_field(std::string key, Get ref) {
  return {key, [key, ref](Config& c, const std::string& v) { ref(c) = to_double(key, v); },
          [ref](const Config& c) { return fmt(ref(c)); }};
}

template <class Get>
Field size_field(std::string key, Get ref) {
  return {key, [key, ref](Config& c, const std::string& v) { ref(c) = to_size(key, v); },
          [ref](const Config& c) { return std::to_string(ref(c)); }};
}

template <class E, class Get>
Field enum_field(std::string key, const EnumNames<E>& names, Get ref) {
  return {key, [key, &names, ref](Config& c, const std::string& v) { ref(c) = names.parse(key, v); },
          [&names, ref](const Config& c) { return names.print(ref(c)); }};
}

std::vector<std::size_t> to_layers(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream in(value);
  std::string part;
  while (std::getline(in, part, ',')) out.push_back(to_size(key, trim(part)));
  if (out.empty()) bad_value(key, value, "a comma-separated list of layer widths");
  return out;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(real_field("tau", [](auto& c) -> auto& { return c.trainer.reward.tau; }));
    f.push_back(real_field("rho", [](auto& c) -> auto& { return c.trainer.reward.rho; }));
    f.push_back(real_field("alpha", [](auto& c) -> auto& { return c.trainer.reward.alpha; }));
    f.push_back(real_field("beta", [](auto& c) -> auto& { return c.trainer.reward.beta; }));
    f.push_back(enum_field("rr_mode", kRrModes, [](auto& c) -> auto& { return c.trainer.reward.rr_mode; }));
    f.push_back(size_field("rr_topk", [](auto& c) -> auto& { return c.trainer.reward.rr_topk; }));
    f.push_back(real_field("llh_threshold", [](auto& c) -> auto& { return c.trainer.reward.llh_threshold; }));
    f.push_back(
        enum_field("llh_mode", kLlhModes, [](auto& c) -> auto& { return c.trainer.reward.llh_mode; }));
    f.push_back(enum_field("step_reward_mode", kStepModes,
                           [](auto& c) -> auto& { return c.trainer.reward.step_reward_mode; }));
    f.push_back(enum_field("entropy_mode", kEntropyModes,
                           [](auto& c) -> auto& { return c.trainer.entropy_mode; }));
    f.push_back(real_field("random_share", [](auto& c) -> auto& { return c.trainer.random_share; }));
    f.push_back(real_field("gamma", [](auto& c) -> auto& { return c.trainer.gamma; }));
    f.push_back(size_field("batch_size", [](auto& c) -> auto& { return c.trainer.batch_size; }));
    f.push_back(size_field("buffer_capacity", [](auto& c) -> auto& { return c.trainer.buffer_capacity; }));
    f.push_back(real_field("learning_rate", [](auto& c) -> auto& { return c.trainer.learning_rate; }));
    f.push_back(real_field("clip_norm", [](auto& c) -> auto& { return c.trainer.clip_norm; }));
    f.push_back(
        enum_field("clip_mode", kClipModes, [](auto& c) -> auto& { return c.trainer.clip_mode; }));
    f.push_back(
        size_field("target_sync_period", [](auto& c) -> auto& { return c.trainer.target_sync_period; }));
    f.push_back(
        size_field("checkpoint_period", [](auto& c) -> auto& { return c.trainer.checkpoint_period; }));
    f.push_back(real_field("epsilon_start", [](auto& c) -> auto& { return c.trainer.epsilon.start; }));
    f.push_back(real_field("epsilon_decay", [](auto& c) -> auto& { return c.trainer.epsilon.decay; }));
    f.push_back(
        size_field("epsilon_decay_period", [](auto& c) -> auto& { return c.trainer.epsilon.period; }));
    f.push_back(real_field("epsilon_min", [](auto& c) -> auto& { return c.trainer.epsilon.floor; }));
    f.push_back(size_field("episodes", [](auto& c) -> auto& { return c.trainer.episodes; }));
    f.push_back(size_field("seed", [](auto& c) -> auto& { return c.trainer.seed; }));
    f.push_back({"hidden_units",
                 [](Config& c, const std::string& v) { c.trainer.hidden = to_layers("hidden_units", v); },
                 [](const Config& c) {
                   std::string out;
                   for (std::size_t w : c.trainer.hidden) out += (out.empty() ? "" : ",") + std::to_string(w);
                   return out;
                 }});
    f.push_back(size_field("lm_order", [](auto& c) -> auto& { return c.lm.order; }));
    f.push_back(real_field("lm_smoothing", [](auto& c) -> auto& { return c.lm.smoothing; }));
    f.push_back(real_field("lm_lambda_left", [](auto& c) -> auto& { return c.lm.lambda_left; }));
    f.push_back(size_field("embedding_dim", [](auto& c) -> auto& { return c.lm.embedding_dim; }));
    f.push_back(size_field("cooccurrence_window", [](auto& c) -> auto& { return c.lm.cooccurrence_window; }));
    f.push_back(size_field("min_freq", [](auto& c) -> auto& { return c.min_freq; }));
    f.push_back(size_field("rare_cutoff", [](auto& c) -> auto& { return c.rare_cutoff; }));
    f.push_back(size_field("max_len", [](auto& c) -> auto& { return c.max_len; }));
    f.push_back(size_field("sample_size", [](auto& c) -> auto& { return c.sample_size; }));
    return f;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace

void Config::validate() const {
  trainer.validate();
  if (lm.order < 1) throw ConfigError("config key 'lm_order': must be >= 1");
  if (!(lm.smoothing > 0.0)) throw ConfigError("config key 'lm_smoothing': must be > 0");
  if (!(lm.lambda_left >= 0.0 && lm.lambda_left <= 1.0)) {
    throw ConfigError("config key 'lm_lambda_left': must be in [0, 1]");
  }
  if (lm.embedding_dim < 1) throw ConfigError("config key 'embedding_dim': must be >= 1");
  if (lm.cooccurrence_window < 1) throw ConfigError("config key 'cooccurrence_window': must be >= 1");
  if (min_freq < 1) throw ConfigError("config key 'min_freq': must be >= 1");
  if (max_len < 2) throw ConfigError("config key 'max_len': must be >= 2");
  if (sample_size < 1) throw ConfigError("config key 'sample_size': must be >= 1");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

ConfigValues parse_config(std::istream& in, const std::string& source) {
  ConfigValues values;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!find_field(key)) throw ConfigError(where + ": unknown config key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": config key '" + key + "' has no value");
    if (!values.emplace(key, value).second) throw ConfigError(where + ": duplicate config key '" + key + "'");
  }
  return values;
}

ConfigValues parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_config(in, path.string());
}

void apply_config(Config& cfg, const ConfigValues& values) {
  for (const auto& [key, value] : values) {
    const Field* f = find_field(key);
    if (!f) throw ConfigError("unknown config key '" + key + "'");
    f->set(cfg, value);
  }
}

Config resolve_config(const std::optional<std::filesystem::path>& file, const ConfigValues& overrides) {
  Config cfg;
  if (file) apply_config(cfg, parse_config(*file));
  apply_config(cfg, overrides);
  cfg.validate();
  return cfg;
}

std::string config_value(const Config& cfg, const std::string& key) {
  const Field* f = find_field(key);
  if (!f) throw UsageError("unknown config key '" + key + "'");
  return f->get(cfg);
}

void write_config(std::ostream& out, const Config& cfg) {
  for (const auto& f : fields()) out << f.key << " = " << f.get(cfg) << '\n';
}

}  // namespace ealm
