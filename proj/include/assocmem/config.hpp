#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "assocmem/experiments.hpp"
#include "assocmem/model.hpp"

namespace assocmem {

/// One recognised config key, addressed as "section.name" (or "name" for the
/// top level).
struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string help;
};

/// Every recognised key in a fixed order.
const std::vector<ConfigKey>& config_schema();

/// Sections read by a subcommand, top level first ("" is the top level).
std::vector<std::string> sections_for_command(std::string_view command);

/// Key/value settings over the schema. Values are stored as text so that a
/// config written back out round-trips exactly.
///
/// File format:
///   # comment
///   master_seed = 7
///   [sweep]
///   alphas = 0.4:1.0:25      # lo:hi:n range or comma-separated list
///   dims = 50, 100
class Config {
 public:
  /// All keys at their defaults.
  Config();

  /// Sets "section.name"; throws ConfigError for unknown keys.
  void set(const std::string& key, const std::string& value);
  /// Parses "section.key=value".
  void set_assignment(std::string_view assignment);
  void merge_text(std::string_view text, std::string_view origin = "<config>");
  /// INI text, or a JSON manifest produced by a previous run.
  void merge_file(const std::filesystem::path& path);
  void merge_json(const nlohmann::json& object);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  /// Config file text restricted to `sections` (all when empty).
  std::string to_text(const std::vector<std::string>& sections = {}) const;
  nlohmann::json to_json(const std::vector<std::string>& sections = {}) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

TrainConfig train_config_from(const Config& config);
SweepSpec sweep_spec_from(const Config& config);

/// Expands "lo:hi:n" into n evenly spaced values or splits a comma list.
std::vector<double> parse_double_list(std::string_view text);

}  // namespace assocmem
