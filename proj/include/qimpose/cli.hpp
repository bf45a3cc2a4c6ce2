#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qimpose/mathcore.hpp"
#include "qimpose/qmp.hpp"
#include "qimpose/qse.hpp"

namespace qimpose::cli {

enum class Command { QseEstimate, QseBenchmark, BellLhv, BellOptimize, BellEfficiency, QmpSolve, QmpSweep };

std::optional<Command> parseCommand(std::string_view name);
std::string_view commandName(Command command);

struct RunConfig {
  Command command = Command::QseEstimate;
  std::filesystem::path config;
  std::filesystem::path out = "out";
  RngSeed seed{1};
  unsigned threads = 1;
};

enum ExitCode : int { kSuccess = 0, kInputError = 1, kNotConverged = 2 };

// Executes one command: writes result.json (deterministic for a given config and
// seed) and metadata.json (timestamps, runtime) into config.out.
int run(const RunConfig& config);

// Parses `qimpose <command> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]`.
int main(int argc, char** argv);

// CSV writers; the first line is always a header.
void writeTrajectoryCsv(const ConvergenceReport& report, const std::filesystem::path& path);
void writeSweepCsv(const std::vector<NpmRow>& rows, const std::filesystem::path& path);
void writeFidelityCsv(const FidelityStats& stats, const std::filesystem::path& path);

}  // namespace qimpose::cli
