#pragma once

namespace feec {

/// Batch command-line front end. Exit codes: 0 success, 1 config error,
/// 2 assertion failure, 3 solver failure.
int run_cli(int argc, const char* const* argv);

}  // namespace feec
