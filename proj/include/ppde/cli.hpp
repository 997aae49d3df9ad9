#pragma once

namespace ppde {

// Full command-line surface: parses arguments, dispatches to the subcommand
// and maps exceptions to exit codes (0 ok, 2 config/input error, 3 numerical
// failure).
int run_cli(int argc, char** argv);

} // namespace ppde
