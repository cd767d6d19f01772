#ifndef ATLA_CLI_IO_CLI_H_
#define ATLA_CLI_IO_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace atla::cli_io {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Output directory when --out is not given; falls back to ./atla-out.
inline constexpr const char* kOutputDirEnv = "ATLA_OUTPUT_DIR";

// Entry point of the command-line tool. args[0] is the program name.
// Subcommands: solve, adversary, export-pomdp, train, attack, atla, eval,
// replay. Errors are reported on `err` as one JSON object
// {"error": {"kind": ..., "message": ...}}.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace atla::cli_io

#endif  // ATLA_CLI_IO_CLI_H_
