#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace loopforge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand. Data goes to --out (plus a manifest next to it) or to
// `out` when --out is absent; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

// Worker count when --threads is absent: LOOPFORGE_THREADS, else the
// hardware concurrency, else 1.
int default_threads();

}  // namespace loopforge
