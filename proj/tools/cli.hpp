#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace judgecal::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageOrSchema = 1,
    kFitFailure = 2,
    kPartialFailure = 3,
};

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace judgecal::cli
