#pragma once

#include <string_view>

namespace chameleon::log {

// Diagnostics go to standard error only; standard output is reserved for
// machine-readable results. Level comes from CHAMELEON_LOG (error|info|debug),
// read once; default is error.

enum class Level { error = 0, info = 1, debug = 2 };

Level level();

void error(std::string_view message);
void info(std::string_view message);
void debug(std::string_view message);

}  // namespace chameleon::log
