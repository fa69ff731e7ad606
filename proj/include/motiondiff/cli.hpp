#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace motiondiff {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand (annotate, synth-data, train, sample, evaluate).
// `args` excludes the program name. Environment overrides are read from
// `envp` when given.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                char** envp = nullptr);

}  // namespace motiondiff
