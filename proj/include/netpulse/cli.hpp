#pragma once

namespace netpulse {

// Full command-line surface. Exit codes: 0 success, 1 computational failure,
// 2 usage or input/output error.
int run_cli(int argc, const char* const* argv);

} // namespace netpulse
