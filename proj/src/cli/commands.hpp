#pragma once

#include <string>
#include <vector>

#include "faust/constraints.hpp"
#include "faust/hierarchical.hpp"

namespace faust::cli {

// Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Parses one constraint of the textual grammar:
///   sp:<s> | spcol:<k> | sprow:<k> | supp:<mtx-path> | const:<matrix-path> |
///   pwc:<groups-path>:<s>
/// supp files are MatrixMarket coordinate files whose entry positions form
/// the allowed support; pwc group files list one `row col group` triple per
/// line (1-based indices).
ConstraintSet<double> parseConstraint(const std::string& text, Index rows, Index cols);

/// Builds a plan from repeated `--level "res;fac"` strings. The residual side
/// is square rows x rows; the level-1 factor is rows x cols and later factors
/// rows x rows, matching the shape convention of the constraint schedule.
FactorizationPlan<double> parseLevelPlan(const std::vector<std::string>& levels,
                                         Index rows, Index cols);

/// Entry point used by the `faust` binary and by the CLI tests.
int run(int argc, const char* const* argv);

}  // namespace faust::cli
