#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clickseq/behavior.hpp"
#include "clickseq/classifier.hpp"
#include "clickseq/experiment.hpp"

namespace clickseq {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string doc;
};

/// Every tunable, in the order used for echoes and --help.
const std::vector<ConfigKey>& config_keys();

/// Flat key=value settings. Unknown keys are rejected; values are checked
/// when they are read.
class RunConfig {
 public:
  RunConfig();

  /// Reads `key=value` lines; blank lines and '#' comments are ignored.
  void load_file(const std::filesystem::path& path);
  void parse(std::istream& in, const std::string& origin = "config");
  void set(std::string_view key, std::string value);

  const std::string& get(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::string> get_list(std::string_view key) const;
  /// An empty value means "not set".
  std::optional<std::string> get_optional(std::string_view key) const;

  /// Resolved settings as key=value lines in registry order.
  std::string echo() const;
  /// Content hash of the command name and the resolved settings.
  std::uint64_t hash(std::string_view command) const;

  FitConfig fit_config() const;
  ClassifierConfig classifier_config() const;
  GridConfig grid_config() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

/// Parses a prefix value: a positive integer or "All".
std::optional<int> parse_prefix_value(std::string_view text);

}  // namespace clickseq
