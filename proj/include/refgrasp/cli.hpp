#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace refgrasp {

/// Environment variable consulted when --dataset is omitted.
inline constexpr const char* kDatasetEnvVar = "REFGRASP_DATASET";

/// Runs the command line `args` (without the program name). Returns 0 on
/// success, 1 on validation failures or runtime errors, 2 on usage errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace refgrasp
