#include "app.hpp"

#include <charconv>
#include <cstdlib>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "cx/error.hpp"

namespace cx::cli {

namespace {

struct Globals {
  std::string seed;
  std::string workers = "1";
  std::string out = "cx-out";
};

std::uint64_t parse_seed(const std::string& text, const char* what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::InvalidInput, std::string(what) + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

// Fills defaults for keys the snapshot lacks and rejects keys no option owns.
void complete_options(RunContext& ctx, const CommandSpec& spec) {
  for (const auto& [key, value] : ctx.options.items()) {
    bool known = false;
    for (const auto& o : spec.options) known = known || o.flag == key;
    if (!known) throw Error(ErrorKind::InvalidInput, "config snapshot: unknown option '" + key + "' for " + spec.name);
  }
  for (const auto& o : spec.options) {
    if (!ctx.options.contains(o.flag)) ctx.options[o.flag] = o.fallback;
    if (o.required && ctx.options[o.flag].is_null()) {
      throw Error(ErrorKind::InvalidInput, "--" + o.flag + " is required for " + spec.name);
    }
  }
}

void apply_globals(RunContext& ctx, const Globals& g, const CLI::App& app, bool seed_from_snapshot) {
  if (app.count("--seed") > 0) {
    ctx.seed = parse_seed(g.seed, "--seed");
  } else if (!seed_from_snapshot) {
    const char* env = std::getenv("CX_SEED");
    ctx.seed = env && *env ? parse_seed(env, "CX_SEED") : 0;
  }
  const std::uint64_t workers = parse_seed(g.workers, "--workers");
  if (workers < 1) throw Error(ErrorKind::InvalidInput, "--workers must be at least 1");
  ctx.workers = static_cast<std::size_t>(workers);
  ctx.out = g.out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contrastive explanations for classifiers with a linear final layer", "cx"};
  app.set_version_flag("--version", CX_VERSION_STRING);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "random seed (default: $CX_SEED, then 0)");
  app.add_option("--workers", g.workers, "worker threads for example-level loops")->capture_default_str();
  app.add_option("--out", g.out, "output directory")->capture_default_str();

  struct Bound {
    const CommandSpec* spec;
    CLI::App* sub;
    std::map<std::string, std::string> text;
    std::map<std::string, bool> flags;
    std::string config;
  };
  std::vector<Bound> bound;
  bound.reserve(command_table().size());
  for (const auto& spec : command_table()) {
    bound.push_back({&spec, app.add_subcommand(spec.name, spec.help), {}, {}, {}});
    Bound& b = bound.back();
    for (const auto& o : spec.options) {
      std::string help = o.help;
      if (!o.fallback.is_null() && o.type != OptType::Flag) {
        help += " [" + (o.fallback.is_string() ? o.fallback.get<std::string>() : o.fallback.dump()) + "]";
      }
      if (o.type == OptType::Flag) {
        b.sub->add_flag("--" + o.flag, b.flags[o.flag], help);
      } else {
        b.sub->add_option("--" + o.flag, b.text[o.flag], help);
      }
    }
    b.sub->add_option("--config", b.config, "config snapshot to start from; explicit options override it");
  }

  std::string rerun_config;
  CLI::App* rerun = app.add_subcommand("rerun", "repeat a run from its config.json");
  rerun->add_option("config", rerun_config, "config snapshot")->required();

  std::string check_dir;
  CLI::App* check = app.add_subcommand("check", "verify an output directory is complete");
  check->add_option("dir", check_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (check->parsed()) {
      const auto problems = check_output_dir(check_dir);
      for (const auto& p : problems) err << "cx check: " << p << "\n";
      if (problems.empty()) out << check_dir << ": ok\n";
      return problems.empty() ? 0 : 1;
    }

    RunContext ctx;
    if (rerun->parsed()) {
      ctx = context_from_snapshot(read_snapshot(rerun_config));
      const CommandSpec* spec = find_command(ctx.command);
      if (!spec) throw Error(ErrorKind::InvalidInput, "config snapshot: unknown command '" + ctx.command + "'");
      complete_options(ctx, *spec);
      apply_globals(ctx, g, app, true);
      execute(ctx, out);
      return 0;
    }

    for (auto& b : bound) {
      if (!b.sub->parsed()) continue;
      bool from_snapshot = false;
      if (!b.config.empty()) {
        ctx = context_from_snapshot(read_snapshot(b.config));
        if (ctx.command != b.spec->name) {
          throw Error(ErrorKind::InvalidInput,
                      "--config: snapshot is for '" + ctx.command + "', not '" + b.spec->name + "'");
        }
        from_snapshot = true;
      }
      ctx.command = b.spec->name;
      for (const auto& o : b.spec->options) {
        if (b.sub->count("--" + o.flag) == 0) continue;
        ctx.options[o.flag] = o.type == OptType::Flag ? json(true) : parse_option_value(o, b.text[o.flag]);
      }
      complete_options(ctx, *b.spec);
      apply_globals(ctx, g, app, from_snapshot);
      execute(ctx, out);
      return 0;
    }
    return 1;
  } catch (const Error& e) {
    err << "cx: " << e.what() << "\n";
    return e.numerical() ? 2 : 1;
  } catch (const std::exception& e) {
    err << "cx: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cx::cli
