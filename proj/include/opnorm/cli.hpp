#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace opnorm::cli {

/// Runs one command line. Returns 0 on success, 2 on configuration errors
/// and 1 on runtime failures. Results go to --out (or `out`), messages to
/// `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, const char* const* argv);

}  // namespace opnorm::cli
