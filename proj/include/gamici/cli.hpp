#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gamici {

/// The gamici command suite. Machine-readable results go to `out`,
/// diagnostics to `err`. Returns 0 on success, 1 on contract errors, 2 on
/// usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gamici
