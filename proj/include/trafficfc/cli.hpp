#pragma once

// Command-line front end. Subcommands cover the full pipeline: ingest raw
// detector/probe files, generate synthetic days, fit single models, run
// one-step forecasts and backtests, execute benchmark plans, combine
// forecast files, and re-render reports.

namespace trafficfc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

// Parse argv and run one subcommand. Returns the process exit code: 0 on
// success, 1 on data errors, 2 on configuration/usage errors (including
// unknown flags, which also print usage), 3 on numerical failures. All
// diagnostics go to stderr; data goes to files or stdout.
int run_cli(int argc, const char* const* argv);

}  // namespace trafficfc
