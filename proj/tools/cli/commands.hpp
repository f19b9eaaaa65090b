#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace robustpath::cli {

enum ExitCode : int { kOk = 0, kInputFailure = 1, kSolverFailure = 2, kVerificationFailure = 3 };

struct TraceArgs {
  std::string config;
  std::string mode = "proximal";
  std::string out;
};

struct VerifyArgs {
  std::string config;
  std::vector<std::string> checks;
  std::string out;
  std::optional<std::uint64_t> seed;
};

struct PortfolioArgs {
  std::string returns = "synthetic";
  std::string region = "simplex";
  std::string out;
  std::uint64_t seed = 20240607;
};

// Each command reports progress on `log` and returns an exit code. Errors
// propagate as exceptions; run() maps them to exit codes.
int cmd_trace(const TraceArgs& args, std::ostream& log);
int cmd_verify(const VerifyArgs& args, std::ostream& log);
int cmd_portfolio(const PortfolioArgs& args, std::ostream& log);

/// Parses argv, dispatches to a subcommand and maps exceptions:
/// input, schema, infeasible and unbounded errors to 1, solver errors to 2.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace robustpath::cli
