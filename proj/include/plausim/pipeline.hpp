#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plausim/errors.hpp"
#include "plausim/humanoid_sim.hpp"
#include "plausim/pose_core.hpp"
#include "plausim/report.hpp"
#include "plausim/traj_opt.hpp"

namespace plausim {

struct MetricThresholds {
  double stationary_speed = 0.25;  // m/s
  ContactThresholds contact;
  double footskate = 0.02;  // m

  void validate() const;
};

struct PreprocessConfig {
  int median_window = 15;
  bool constrain_bones = true;
};

struct RunConfig {
  std::vector<std::filesystem::path> inputs;
  /// Either empty, one file per input, or a single file shared by all inputs.
  std::vector<std::filesystem::path> ground_truth;
  std::optional<std::filesystem::path> cameras;
  std::optional<std::filesystem::path> model;  // default humanoid when absent
  std::optional<double> ground_height;         // overrides the estimate

  PreprocessConfig preprocess;
  WindowPlan plan;
  /// Scalar weights; joint weights derive from the model unless given.
  CostWeights weights;
  SimParams sim;
  MetricThresholds thresholds;

  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path output = "plausim_out";

  /// Throws SchemaError for missing files or out-of-range values.
  void validate() const;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);
/// Config echo written into reports. Thread count and output directory are left out
/// so they cannot change report bytes.
nlohmann::json config_echo(const RunConfig& config);

enum class ExitCode : int { Ok = 0, Usage = 1, Schema = 2, Diverged = 3, Io = 4 };

int exit_code_for(const Error& e);

struct SequenceResult {
  PlausibilityReport report;
  std::optional<OptimizationResult> optimization;
};

enum class RunMode { Evaluate, Simulate, Metrics };

/// Processes one input sequence end to end without touching the disk beyond reading inputs.
SequenceResult process_sequence(const RunConfig& config, size_t index, RunMode mode);

struct RunOutcome {
  std::vector<PlausibilityReport> reports;
  ExitCode code = ExitCode::Ok;
};

/// Runs every input and writes the artifacts under config.output:
/// `<sequence>/report.json`, `contact_forces.csv`, `cost_traces.csv`,
/// `optimized_trajectory.json`, and a top-level `summary.csv`.
RunOutcome run_evaluate(const RunConfig& config);
RunOutcome run_simulate(const RunConfig& config);
RunOutcome run_metrics_only(const RunConfig& config);

struct ValidationIssue {
  std::filesystem::path file;
  std::string kind;     // detected document kind
  std::string message;  // empty when valid
  int exit_code = 0;    // ExitCode value for this file
};

/// Schema check of any plausim document (pose, model, cameras, config, report).
ValidationIssue validate_file(const std::filesystem::path& path);

}  // namespace plausim
