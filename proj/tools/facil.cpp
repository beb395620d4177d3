// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

#include "facil/cli.hpp"

int main(int argc, char** argv) { return facil::cli::run(argc, argv); }
