// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  return magic::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
