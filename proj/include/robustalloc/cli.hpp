#pragma once

namespace robustalloc {

/// Command-line entry point (solve | experiment | convergence | selftest).
/// Returns the process exit code: 0 success, 2 configuration error,
/// 3 numerical failure.
int cli_main(int argc, const char* const* argv);

}  // namespace robustalloc
