#ifndef ELASTIC_MARKET_CLI_HPP
#define ELASTIC_MARKET_CLI_HPP

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace elastic_market {

/// Exit codes of the command line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitNonConvergence = 1,
  kExitInvalidInput = 2,
  kExitBoundViolation = 3,
};

/// Runs one command line (arguments after the program name). Results go to
/// `out` unless --out names a file; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker count for sweeps: hardware threads, capped by ELASTIC_MARKET_THREADS.
int worker_threads();

/// Calls fn(i) for i in [0, n) on up to `threads` workers. The exception
/// thrown for the smallest index, if any, is rethrown after all workers join.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

/// %.17g
std::string format_double(double v);

}  // namespace elastic_market

#endif  // ELASTIC_MARKET_CLI_HPP
