#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cx::cli {

using json = nlohmann::json;

enum class OptType { String, Double, Int, Flag };

struct OptionSpec {
  std::string flag;  // without the leading dashes
  OptType type = OptType::String;
  json fallback;     // null: optional with no value
  bool required = false;
  std::string help;
};

/// Resolved parameters for one invocation. `options` plus `seed` is the
/// snapshot; the output path and worker count are not part of it.
struct RunContext {
  std::string command;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path out;
  json options = json::object();

  bool has(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::optional<std::string> opt_str(const std::string& key) const;
  double num(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;  // non-negative integer
  bool flag(const std::string& key) const;
};

/// Converts CLI text for `spec` into its JSON value; throws invalid-input
/// naming the option on malformed numbers.
json parse_option_value(const OptionSpec& spec, const std::string& text);

/// Snapshot files: {"tool":"cx","version":..,"command":..,"seed":..,"options":{..}}
json snapshot_of(const RunContext& ctx);
RunContext context_from_snapshot(const json& snapshot);
json read_snapshot(const std::filesystem::path& path);

/// Collects result files and writes the bookkeeping files next to them.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path path(const std::string& name) const { return root_ / name; }
  void write(const std::string& name, const std::string& content);
  /// Registers a file some other routine already wrote into the directory.
  void record(const std::string& name);
  /// config.json, seed, VERSION and manifest.json.
  void finalize(const RunContext& ctx);

 private:
  std::filesystem::path root_;
  std::vector<std::string> results_;
};

inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kSeedFile = "seed";
inline constexpr const char* kVersionFile = "VERSION";
inline constexpr const char* kManifestFile = "manifest.json";

/// Problems found in an output directory; empty when it is complete.
std::vector<std::string> check_output_dir(const std::filesystem::path& dir);

}  // namespace cx::cli
