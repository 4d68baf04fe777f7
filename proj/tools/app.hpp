#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crowdvote::app {

/// Runs one command line. Returns 0 on success, 2 on usage or configuration
/// errors and 1 on I/O or runtime failures. Output written to "-" goes to
/// `out`; diagnostics go to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with `args` excluding the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crowdvote::app
