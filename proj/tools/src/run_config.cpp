#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "cx/error.hpp"

namespace cx::cli {

namespace {

const json& lookup(const RunContext& ctx, const std::string& key) {
  auto it = ctx.options.find(key);
  if (it == ctx.options.end() || it->is_null()) {
    throw Error(ErrorKind::InvalidInput, "--" + key + " is required for " + ctx.command);
  }
  return *it;
}

}  // namespace

bool RunContext::has(const std::string& key) const {
  auto it = options.find(key);
  return it != options.end() && !it->is_null();
}

std::string RunContext::str(const std::string& key) const {
  const json& v = lookup(*this, key);
  if (!v.is_string()) throw Error(ErrorKind::InvalidInput, "--" + key + ": expected text");
  return v.get<std::string>();
}

std::optional<std::string> RunContext::opt_str(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return str(key);
}

double RunContext::num(const std::string& key) const {
  const json& v = lookup(*this, key);
  if (!v.is_number()) throw Error(ErrorKind::InvalidInput, "--" + key + ": expected a number");
  return v.get<double>();
}

long long RunContext::integer(const std::string& key) const {
  const json& v = lookup(*this, key);
  if (!v.is_number_integer()) throw Error(ErrorKind::InvalidInput, "--" + key + ": expected an integer");
  return v.get<long long>();
}

std::size_t RunContext::count(const std::string& key) const {
  const long long v = integer(key);
  if (v < 0) throw Error(ErrorKind::InvalidInput, "--" + key + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

bool RunContext::flag(const std::string& key) const {
  auto it = options.find(key);
  return it != options.end() && it->is_boolean() && it->get<bool>();
}

json parse_option_value(const OptionSpec& spec, const std::string& text) {
  auto fail = [&](const char* what) {
    return Error(ErrorKind::InvalidInput, "--" + spec.flag + ": expected " + what + ", got '" + text + "'");
  };
  switch (spec.type) {
    case OptType::String:
      return text;
    case OptType::Flag:
      return true;
    case OptType::Double: {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size()) throw fail("a number");
      return v;
    }
    case OptType::Int: {
      long long v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size()) throw fail("an integer");
      return v;
    }
  }
  return text;
}

json snapshot_of(const RunContext& ctx) {
  return json{{"tool", "cx"},
              {"version", CX_VERSION_STRING},
              {"command", ctx.command},
              {"seed", ctx.seed},
              {"options", ctx.options}};
}

RunContext context_from_snapshot(const json& snapshot) {
  if (!snapshot.is_object() || !snapshot.contains("command") || !snapshot["command"].is_string()) {
    throw Error(ErrorKind::InvalidInput, "config snapshot: missing \"command\"");
  }
  RunContext ctx;
  ctx.command = snapshot["command"].get<std::string>();
  if (snapshot.contains("seed")) {
    if (!snapshot["seed"].is_number_unsigned()) {
      throw Error(ErrorKind::InvalidInput, "config snapshot: \"seed\" must be a non-negative integer");
    }
    ctx.seed = snapshot["seed"].get<std::uint64_t>();
  }
  if (snapshot.contains("options")) {
    if (!snapshot["options"].is_object()) throw Error(ErrorKind::InvalidInput, "config snapshot: \"options\" must be an object");
    ctx.options = snapshot["options"];
  }
  return ctx;
}

json read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open config snapshot " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw Error(ErrorKind::InvalidInput, "--out: cannot create " + root_.string() + ": " + ec.message());
}

void OutputDir::write(const std::string& name, const std::string& content) {
  std::ofstream out(path(name), std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path(name).string());
  out << content;
  record(name);
}

void OutputDir::record(const std::string& name) {
  if (std::find(results_.begin(), results_.end(), name) == results_.end()) results_.push_back(name);
}

void OutputDir::finalize(const RunContext& ctx) {
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path(name).string());
    out << text;
  };
  put(kConfigFile, snapshot_of(ctx).dump(2) + "\n");
  put(kSeedFile, std::to_string(ctx.seed) + "\n");
  put(kVersionFile, std::string(CX_VERSION_STRING) + "\n");
  std::vector<std::string> files = results_;
  std::sort(files.begin(), files.end());
  json manifest{{"tool", "cx"}, {"version", CX_VERSION_STRING}, {"command", ctx.command}, {"results", files}};
  put(kManifestFile, manifest.dump(2) + "\n");
}

std::vector<std::string> check_output_dir(const std::filesystem::path& dir) {
  std::vector<std::string> problems;
  if (!std::filesystem::is_directory(dir)) return {dir.string() + " is not a directory"};
  for (const char* name : {kConfigFile, kSeedFile, kVersionFile, kManifestFile}) {
    if (!std::filesystem::is_regular_file(dir / name)) problems.push_back(std::string("missing ") + name);
  }
  if (!problems.empty()) return problems;

  json config, manifest;
  try {
    config = read_snapshot(dir / kConfigFile);
    manifest = read_snapshot(dir / kManifestFile);
    context_from_snapshot(config);
  } catch (const std::exception& e) {
    problems.push_back(e.what());
    return problems;
  }
  std::ifstream seed_in(dir / kSeedFile);
  std::string seed_text;
  seed_in >> seed_text;
  if (!config.contains("seed") || seed_text != std::to_string(config["seed"].get<std::uint64_t>())) {
    problems.push_back("seed file does not match config.json");
  }
  std::ifstream version_in(dir / kVersionFile);
  std::string version;
  version_in >> version;
  if (version.empty()) problems.push_back("empty VERSION");

  if (!manifest.contains("results") || !manifest["results"].is_array() || manifest["results"].empty()) {
    problems.push_back("manifest lists no results");
    return problems;
  }
  for (const auto& name : manifest["results"]) {
    if (!name.is_string() || !std::filesystem::is_regular_file(dir / name.get<std::string>())) {
      problems.push_back("missing result " + name.dump());
    }
  }
  return problems;
}

}  // namespace cx::cli
