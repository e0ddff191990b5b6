#pragma once

// Stage runner behind the `apz` command line: file layout, configuration,
// run manifest, and corpus validation.

#include "apz/records.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace apz {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,
  kExitUsage = 2,         // bad flags, config or record schema
  kExitMissingInput = 3,
  kExitDigestMismatch = 4,
  kExitValidation = 5,
};

class StageError : public std::runtime_error {
public:
  StageError(const std::string &what, int code) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

private:
  int code_;
};

struct PipelineOptions {
  std::filesystem::path out_dir = "run";
  std::uint64_t seed = 0;
  Json config = Json::object(); // user overrides, merged over default_config()
  int jobs = 1;
};

/// Every stage's settings with their default values.
Json default_config();

/// Defaults overlaid with `user`. Unknown keys or wrong types throw
/// StageError(kExitUsage).
Json effective_config(const Json &user);

const std::vector<std::string> &stage_names();

/// Runs one stage against options.out_dir and records it in manifest.json.
/// Returns the stage summary. Errors are StageError with the exit code.
Json run_stage(std::string_view stage, const PipelineOptions &options);

/// Files whose bytes must be identical across runs with the same seed.
std::vector<std::filesystem::path> primary_artifacts(const std::filesystem::path &dir);

enum class CheckStatus { Passed, Failed, Skipped };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Passed;
  std::vector<std::string> failures;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  const CheckResult *find(std::string_view name) const;
  Json to_json() const;
};

/// Re-checks every invariant that can be checked from the files alone:
/// manifest digests, puzzle uniqueness and minimality (on up to
/// `oracle_sample` puzzles), trace soundness, split disjointness and keys,
/// generation token spans, activation headers, and labels.
ValidationReport validate_corpus(const std::filesystem::path &dir, int oracle_sample = 50);

} // namespace apz
