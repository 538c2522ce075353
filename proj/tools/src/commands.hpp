#pragma once

namespace modgrok::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitVerdictFail = 3 };

/// Parses argv, runs one subcommand and maps failures to exit codes.
int run(int argc, char** argv);

}  // namespace modgrok::cli
