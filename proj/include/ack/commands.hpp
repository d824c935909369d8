#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ack/run_config.hpp"

namespace ack::cli {

// Exit codes shared by every command.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;  // config validation, strict-mode parse, unknown variant
inline constexpr int kLoadError = 2;   // missing file, checkpoint or split that does not load

// Flag values as parsed from the command line; unset flags leave the
// configuration alone.
struct Options {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> snapshot;
  std::optional<int> top_k;
  std::vector<std::string> variants;
  std::optional<std::filesystem::path> split;
  std::optional<std::filesystem::path> checkpoint;
  bool strict = false;
  int episode = 0;
  std::vector<std::string> objects;
};

// Config file (or defaults), then environment path overrides, then flags,
// then validation. Throws like load_run_config.
RunConfig resolve_config(const Options& options);

// Each command writes its report to `out` and diagnostics to `err`, and
// returns one of the exit codes above.
int cmd_build_kb(const Options& options, std::ostream& out, std::ostream& err);
int cmd_rank(const Options& options, std::ostream& out, std::ostream& err);
int cmd_gen_env(const Options& options, std::ostream& out, std::ostream& err);
int cmd_train(const Options& options, std::ostream& out, std::ostream& err);
int cmd_eval(const Options& options, std::ostream& out, std::ostream& err);
int cmd_ablate(const Options& options, std::ostream& out, std::ostream& err);
int cmd_inspect(const Options& options, std::ostream& out, std::ostream& err);

// Ablation variants: "full", "no-kgs-bias", "no-history", "no-cd" and
// "topk=N". Throws InvalidConfig for anything else.
RunConfig apply_variant(RunConfig config, const std::string& variant);
const std::vector<std::string>& default_variants();

}  // namespace ack::cli
