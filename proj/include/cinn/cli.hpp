#pragma once

namespace cinn {

/// Entry point behind the command-line tool. Returns the process exit code:
/// 0 success, 1 validation/refusal, 2 internal error.
int cli_run(int argc, const char* const* argv);

}  // namespace cinn
