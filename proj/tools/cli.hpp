#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vqc::cli {

/// Runs one `vqc` command line. Returns the process exit status; failures
/// print a single JSON object with an "error" field to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vqc::cli
