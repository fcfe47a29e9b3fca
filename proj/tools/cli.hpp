// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace magic::cli {

/// Runs one command line (args[0] is the program name). Normal output goes to
/// `out`; failures print one JSON line {"error", "message"} to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace magic::cli
