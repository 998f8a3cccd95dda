#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace recount {

// Exit codes: 0 success, 1 usage error, 2 data validation failure,
// 3 undefined-statistic condition.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace recount
