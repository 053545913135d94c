#pragma once

namespace fusso {

// Entry point shared by the fusso binary and the CLI tests.
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace fusso
