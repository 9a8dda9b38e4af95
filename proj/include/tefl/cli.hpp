#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tefl {

// Command-line front end. `args` excludes the program name. Returns the
// process exit code: 0 success, 1 usage or configuration error, 2 data or
// file error, 3 numeric failure. Everything the commands print goes through
// `out` (results) and `err` (diagnostics), so runs are capturable in tests.
//
// Subcommands:
//   train    --config <file> --data <csv> --out <dir>
//   evaluate --ckpt <file> --data <csv> [--strategy <s>] [--no-adapter]
//            [--dump <csv>] [--train-frac <f>] [--val-frac <f>]
//   synth    --kind ssm|shocks|drift --out <csv> [--in <csv>] [--seed N] ...
//   theory   --check prop1|thm1 --out <csv> [--sigma-eps V ...] [--T N]
//            [--seeds K] [--M N] [--seed0 N]
//   ablate   --suite strategy|selection|adapter --config <file> [--seeds K]
//            [--length N] [--data-seed N]
//
// Same argv and same input files produce byte-identical output files.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace tefl
