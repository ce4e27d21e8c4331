#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "boolattn/taskgen.hpp"
#include "boolattn/trainer.hpp"

namespace boolattn::experiments {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kOutputDirEnv = "BOOLATTN_OUTPUT_DIR";

enum class Subcommand { TeacherForced, Noisy, Majority, Hardness, Concentration, Gradcheck };

std::string_view to_string(Subcommand sub);
Subcommand parse_subcommand(std::string_view text);

/// Invalid configuration; field() names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Flat key=value configuration. Keys match the long CLI flags without dashes.
using ConfigMap = std::map<std::string, std::string>;

/// Reads `key = value` lines; `#` starts a comment.
ConfigMap read_config_file(const std::filesystem::path& path);
ConfigMap parse_config_text(std::istream& in, const std::string& source);

/// Every key the runner understands, with its default for `sub`.
ConfigMap default_config(Subcommand sub);

struct RunConfig {
  Subcommand subcommand = Subcommand::TeacherForced;
  std::vector<std::size_t> d_list;
  std::optional<std::size_t> k_fixed;  // empty: k = d/2
  double n_multiplier = 0.0;           // n = multiplier * d when > 0
  std::size_t n_absolute = 0;          // otherwise n is this
  TrainConfig train;
  Mode mode = Mode::And;
  std::vector<double> noise_p;
  std::vector<std::uint64_t> seeds;  // seed indices
  std::uint64_t master_seed = 0;
  std::optional<double> rho;  // empty: exact oracle
  std::filesystem::path output_dir;
  std::size_t trials = 0;
  std::size_t subsets = 0;
  std::size_t steps = 0;
  double lr = 0.0;
  std::size_t t = 0;
  double h = 0.0;
  double fail_prob = 0.0;
  std::size_t jobs = 1;

  ConfigMap echo;  // effective key=value set, replayable

  std::size_t k_for(std::size_t d) const { return k_fixed.value_or(d / 2); }
  std::size_t n_for(std::size_t d) const;
};

/// Merges `values` over the subcommand defaults and validates every field
/// against the owning module's preconditions. Throws ConfigError.
RunConfig parse_run_config(const ConfigMap& values);

/// Per-experiment seed: a stable hash of (master seed, d, seed index).
std::uint64_t experiment_seed(std::uint64_t master, std::size_t d, std::uint64_t index);

struct MetricStats {
  std::size_t count = 0;
  double min = 0.0;
  double q10 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q90 = 0.0;
  double max = 0.0;
};

struct SummaryGroup {
  std::string key;  // e.g. "d=64" or "d=256,p=0.2"
  std::size_t d = 0;
  std::size_t rows = 0;
  std::map<std::string, MetricStats> metrics;
  std::optional<double> frequency;  // share of rows whose flag column is true
};

struct Summary {
  std::string source;
  std::string flag_column;  // empty when the schema has none
  std::vector<SummaryGroup> groups;

  std::string to_text() const;
  nlohmann::json to_json() const;
};

/// Thrown for malformed CSV input; line() is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

Summary summarize(const std::filesystem::path& csv_path);
Summary summarize_stream(std::istream& in, const std::string& source);

struct ExperimentTiming {
  std::string label;
  double wall_ms = 0.0;
};

struct RunManifest {
  ConfigMap config;
  std::string version;
  std::vector<std::string> result_files;
  std::vector<ExperimentTiming> timings;
  std::vector<Summary> summaries;

  nlohmann::json to_json() const;
};

/// Executes the d x seeds sweep, writes one CSV per result kind plus
/// manifest.json (atomically, after all experiments finish).
RunManifest run(const RunConfig& config);

/// Reads manifest.json and re-runs its config, optionally into another directory.
RunManifest replay(const std::filesystem::path& manifest_path,
                   std::optional<std::filesystem::path> output_dir = std::nullopt);

/// Threshold checks used by `--assert`; one message per violated threshold.
std::vector<std::string> assert_thresholds(const RunConfig& config, const RunManifest& manifest);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace boolattn::experiments
