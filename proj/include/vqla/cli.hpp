#pragma once

namespace vqla {

// Entry point shared by the binary and the CLI tests. Exit codes:
// 0 success, 1 validation failure, 2 IO or endpoint failure,
// 64 unknown command or bad usage. Errors go to stderr as one JSON object.
int dispatch(int argc, const char* const* argv);

}  // namespace vqla
