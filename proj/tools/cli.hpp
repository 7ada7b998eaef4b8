// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace critmode::cli {

enum ExitCode : int { kOk = 0, kParse = 2, kVerification = 3, kConvergence = 4 };

/// Full command line, including argv[0]. Data goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace critmode::cli
