#pragma once

#include "sembench/ram.hpp"

#include <Eigen/Dense>

#include <iosfwd>

namespace sembench {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsageOrData = 1,
    kExitUnderIdentified = 2,
    kExitNotConverged = 3,
};

/// Entry point behind the `sembench` binary: subcommands fit, simulate and dot.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Parameter values for `simulate --theta`. One value per non-comment line, either bare
/// (in parameter order) or as `label value` / `label,value`; labels must then cover
/// every free parameter.
Eigen::VectorXd read_theta(std::istream& in, const RamMatrices& ram);

}  // namespace sembench
