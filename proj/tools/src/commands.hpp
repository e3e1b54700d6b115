#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace cx::cli {

using Handler = std::function<void(const RunContext&, OutputDir&, std::ostream&)>;

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<OptionSpec> options;
  Handler run;
};

const std::vector<CommandSpec>& command_table();
const CommandSpec* find_command(const std::string& name);

/// Runs a resolved context: executes the handler, then writes the
/// bookkeeping files.
void execute(const RunContext& ctx, std::ostream& out);

}  // namespace cx::cli
