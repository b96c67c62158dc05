#pragma once

// Batch front end. Commands: price, solve, lcp-check, cond-check, vol-check,
// order, scan, simulate, validate. Each writes <out>/<command>.json and
// <out>/<command>.csv and prints a one-line summary.
//
// Exit status: 0 pass / no violation found, 1 finding, 2 execution error.

#include <iosfwd>

namespace jdconvex {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFinding = 1;
inline constexpr int kExitError = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jdconvex
