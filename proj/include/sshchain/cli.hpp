#pragma once

// Command dispatch behind the `sshchain` executable.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace sshchain::cli {

inline constexpr std::string_view kOutputDirEnv = "SSHCHAIN_OUTPUT_DIR";

inline constexpr std::string_view kCommands[] = {"spectrum", "sweep",     "winding",
                                                 "ipr",      "disorder",  "s21",
                                                 "gatesweep", "powersweep", "fit"};

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kNumericalFailure = 2 };

struct RunConfig {
    std::string command;
    std::optional<std::filesystem::path> config_path;
    std::vector<std::string> overrides;  // dotted.path=value
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::string> label;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    bool dry_run = false;
};

/// Built-in configuration; every section a command may read, with defaults.
[[nodiscard]] nlohmann::json default_document();

/// Sets `path` (dot separated, array indices as integers) to `value`. The
/// value is parsed as JSON when possible and kept as a string otherwise.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Defaults, merged with the config file, then overrides and --seed.
/// Throws ValidationError on unknown keys or malformed values.
[[nodiscard]] nlohmann::json resolve_document(const RunConfig& config);

/// Runs one command. Writes outputs, prints a one-line summary to `out` and
/// diagnostics to `err`. Returns an ExitCode.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace sshchain::cli
