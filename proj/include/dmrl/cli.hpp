#pragma once

#include "dmrl/metrics.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace dmrl::cli {

/// Process exit codes.
enum Exit : int {
    kOk = 0,
    kFailure = 1,      // verification violation or internal error
    kBadConfig = 2,    // usage or configuration error
    kBadInput = 3,     // malformed or empty input file
    kDimMismatch = 4,  // model / scenario feature dimension mismatch
    kPortBusy = 5,
};

/// Test seams; production runs leave them empty.
struct Hooks {
    metrics::ReportHook theorem1;
};

/// Runs one command line (args excludes the program name) and returns the
/// exit code. Normal output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Hooks& hooks = {});

}  // namespace dmrl::cli
