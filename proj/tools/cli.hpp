#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace modelgate {

/// Exit codes: 0 success or PASS, 1 verdict FAIL, 2 usage or rejected
/// input, 3 internal or IO error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace modelgate
