#pragma once

#include <iosfwd>

namespace hmmrates::cli {

enum ExitCode : int {
    ok = 0,
    config_error = 2,
    validation_error = 3,
    numerical_error = 4,
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hmmrates::cli
