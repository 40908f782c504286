#pragma once

#include <string>
#include <vector>

namespace dtg {

/// Exit codes of the `dtg` command.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kConfig = 2;
inline constexpr int kIo = 3;
inline constexpr int kNumeric = 4;
}  // namespace exit_code

/// Runs one subcommand: gen-data, pretrain, train-joint, probe or report.
/// Diagnostics go to stderr; never throws.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace dtg
