#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>

namespace modmine::cli {

enum ExitCode : int { kOk = 0, kUsageError = 1, kRuntimeError = 2 };

struct Options {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::size_t trace_batches = 100;  // mine-debug only
};

// Each command writes its artifacts under --out (default: the config's
// output_dir, or the current directory for spectrum) and returns an exit code.
// Errors are reported on `err`: configuration and usage problems return 1,
// runtime and numeric failures return 2.
int cmd_train(const Options& options, std::ostream& out, std::ostream& err);
int cmd_eval(const Options& options, std::ostream& out, std::ostream& err);
int cmd_spectrum(const Options& options, std::ostream& out, std::ostream& err);
int cmd_ablation(const Options& options, std::ostream& out, std::ostream& err);
int cmd_mine_debug(const Options& options, std::ostream& out, std::ostream& err);
int cmd_gen_data(const Options& options, std::ostream& out, std::ostream& err);

}  // namespace modmine::cli
