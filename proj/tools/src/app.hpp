#pragma once

#include <iosfwd>

namespace cx::cli {

/// Whole command line. Returns the process exit code: 0 success, 1 invalid
/// input, 2 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cx::cli
