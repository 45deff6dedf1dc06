#pragma once

// Command-line front end. Configs are single JSON documents; results are
// emitted as an OutputRecord (JSON) or, for tabular commands, CSV.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace oqs::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr int kFlagSetVersion = 1;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDomain = 3;
inline constexpr int kExitIo = 4;

const std::vector<std::string>& commands();

struct RunConfig {
  std::string command;
  std::optional<std::string> input_path;
  std::optional<std::string> output_path;  // empty: standard output
  std::string format = "json";
  std::uint64_t seed = 0;
  /// Command payload with defaults filled in; also carries theory,
  /// truncate_gaussian and seed so that it fully describes the run.
  Json document;
};

/// Normalizes a parsed document for `command` (taken from the document's
/// "command" key when empty). Checks every physical invariant and rejects
/// unknown keys. Throws Error(ConfigParse) naming the field.
RunConfig normalize(const Json& document, const std::string& command = {});

/// Reads and normalizes a config file. Throws IoError or ConfigParse (with
/// line and column for syntax errors).
RunConfig validate_config(const std::string& path, const std::string& command = {});

/// Canonical text of a normalized config; parse + normalize + emit is the identity.
std::string emit_config(const RunConfig& config);

/// Executes the command and writes the artifact to `out` (or the output path).
/// Errors are written to `err` as a JSON record. Returns the exit status.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Entry point used by the `openqs` executable.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace oqs::cli
