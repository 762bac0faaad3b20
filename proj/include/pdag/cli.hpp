#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pdag::cli {

/// Exit codes: 0 success (including non-converged fits, flagged in the summary),
/// 2 invalid flags or input files, 1 any other failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pdag::cli
