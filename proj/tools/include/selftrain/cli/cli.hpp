#pragma once

namespace selftrain::cli {

/// Full command-line entry point: parses argv, dispatches the subcommand
/// and maps failures to exit codes (0 success, 1 config error, 2 data
/// error, 3 training divergence).
int run_cli(int argc, const char* const* argv);

}  // namespace selftrain::cli
