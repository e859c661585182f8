#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "config.h"

namespace degctrl::cli {

/// Thrown after partial output when a run was refused numerically (exit 3).
class RefusalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs one validated subcommand and writes its CSV files into out_dir.
/// Returns the written paths.
std::vector<std::filesystem::path> run_command(const std::string& subcommand,
                                               const ExperimentConfig& config,
                                               const std::filesystem::path& out_dir,
                                               std::uint64_t seed);

/// Full command line entry point; returns the process exit code
/// (0 success, 2 validation error, 3 numerical refusal).
int cli_main(int argc, char** argv);

}  // namespace degctrl::cli
