#pragma once

namespace chameleon::cli {

/// Entry point behind the `chameleon` binary. Exit codes: 0 success,
/// 1 validation error (flags, config), 2 runtime or protocol failure.
int dispatch(int argc, const char* const* argv);

}  // namespace chameleon::cli
