//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <iosfwd>

namespace xnornet {

enum ExitCode { exit_ok = 0, exit_user_error = 1, exit_internal_error = 2 };

/// Subcommands: train, eval, bench, ablate, pack, describe, speedup, footprint.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

}  // namespace xnornet
