#pragma once

#include <string>
#include <vector>

namespace seagrid::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

/// Entry point for the `seagrid` tool. args[0] is the program name.
/// Subcommands: pretrain, pseudolabel, train, infer, eval, finetune.
int run(const std::vector<std::string>& args);

}  // namespace seagrid::cli
