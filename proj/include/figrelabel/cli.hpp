#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "figrelabel/emit.hpp"

namespace figrelabel {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUnmatched = 1;
inline constexpr int kExitParseOrVm = 2;
inline constexpr int kExitIo = 3;

enum class Command { extract, check, apply };

struct CliOptions {
  Command command = Command::extract;
  std::string input;
  std::string spec_path;  // check / apply only
  std::optional<std::string> output;  // stdout when absent
  ListingFormat format = ListingFormat::tsv;
  bool compat_save_restore = false;
  bool permissive = false;
  bool keep_unmatched_labels = false;
  bool lenient = false;
  std::optional<std::string> emit_overlay;
  std::optional<std::uint64_t> max_steps;
};

int run_extract(const CliOptions &opts, std::ostream &out, std::ostream &err);
int run_check(const CliOptions &opts, std::ostream &out, std::ostream &err);
int run_apply(const CliOptions &opts, std::ostream &out, std::ostream &err);

/// Parses `figrelabel <command> ...` and dispatches. The environment
/// variable FIGRELABEL_MAX_STEPS supplies the default step budget.
int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err);

}  // namespace figrelabel
