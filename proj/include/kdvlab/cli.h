#pragma once

namespace kdvlab {

enum ExitCode { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Entry point of the kdvlab tool. Subcommands: spectrum, critical, synth,
/// simulate, sweep, nonlinear, accept. Returns an ExitCode.
int run_cli(int argc, char** argv);

}  // namespace kdvlab
