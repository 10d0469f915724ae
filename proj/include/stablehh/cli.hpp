#pragma once

// Command-line driver. Subcommands exchange JSON artifacts on disk:
//
//   ingest     agents.csv + households.csv -> markets.json
//   synth      seed -> markets.json (+ truth.json)
//   stability  markets.json -> stability.json (+ csv)
//   bounds     markets.json + stability.json -> bounds.csv (+ json, plot data)
//   report     stability.json [+ bounds.json] -> summary table

#include <iosfwd>
#include <span>
#include <string>

namespace stablehh::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kMissingFile = 2,
  kValidation = 3,
  kSolver = 4,
};

/// Runs one subcommand. `args` excludes the program name. Errors are reported
/// on `err` and mapped to exit codes; nothing is thrown.
int run_pipeline(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace stablehh::cli
