#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "assocmem/config.hpp"

namespace assocmem {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

/// Subcommands in display order.
const std::vector<std::string>& command_names();
std::string_view command_summary(std::string_view command);

/// Everything a subcommand needs: resolved config, output directory, the
/// thread count (0 means all cores) and a progress sink.
struct CommandContext {
  Config config;
  std::filesystem::path out_dir;
  std::ostream* log = nullptr;
};

/// Each subcommand writes its CSVs plus manifest.json into ctx.out_dir and
/// throws on failure.
void cmd_sweep(const CommandContext& ctx);
void cmd_theory(const CommandContext& ctx);
void cmd_spectrum(const CommandContext& ctx);
void cmd_hebbian(const CommandContext& ctx);
void cmd_hist(const CommandContext& ctx);
void cmd_fss(const CommandContext& ctx);
void cmd_train(const CommandContext& ctx);

/// Runs `command` and maps exceptions to exit codes: 2 config, 3 I/O,
/// 4 numeric failure, 1 anything else. Errors are reported on `err`.
int run_command(std::string_view command, const CommandContext& ctx, std::ostream& err);

/// Version string recorded in manifests.
std::string_view code_version();

/// Resolves the threads key (0 means all cores).
int resolve_threads(const Config& config);

}  // namespace assocmem
