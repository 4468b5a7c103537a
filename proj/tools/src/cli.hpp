#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace occlust::cli {

/// Runs the occlust command line. Progress goes to `out`, errors to `err`.
/// Returns 0 on success, 1 on failures, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads an `id,label` CSV. A first line whose label is not an integer is
/// treated as a header.
std::vector<std::pair<std::string, std::string>> read_label_csv(const std::string& path);

}  // namespace occlust::cli
