#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ealm/lm.hpp"
#include "ealm/trainer.hpp"

namespace ealm {

/// Everything a pipeline run can be configured with.
struct Config {
  TrainerConfig trainer;
  NGramOptions lm;
  std::size_t min_freq = 1;
  std::size_t rare_cutoff = 3;
  std::size_t max_len = 50;
  std::size_t sample_size = 30000;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Raw key -> value assignments, in key order.
using ConfigValues = std::map<std::string, std::string>;

/// Every accepted key, in echo order.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
/// Unknown keys, duplicate keys and malformed lines throw ConfigError.
ConfigValues parse_config(std::istream& in, const std::string& source = "config");
ConfigValues parse_config(const std::filesystem::path& path);

/// Applies assignments on top of cfg. Throws ConfigError naming the key on
/// an unknown key or an unparsable value.
void apply_config(Config& cfg, const ConfigValues& values);

/// Defaults, then the file (if any), then overrides; validated.
Config resolve_config(const std::optional<std::filesystem::path>& file, const ConfigValues& overrides = {});

/// Current value of one key, formatted so that parsing it back is lossless.
std::string config_value(const Config& cfg, const std::string& key);

/// One `key = value` line per key; parse_config of the output rebuilds cfg.
void write_config(std::ostream& out, const Config& cfg);

}  // namespace ealm
