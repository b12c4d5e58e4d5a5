//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/cli.hpp"

int main(int argc, char** argv) { return xnornet::cli_main(argc, argv); }
