#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plausim/cmaes.hpp"
#include "plausim/humanoid_model.hpp"
#include "plausim/traj_opt.hpp"

namespace plausim {

struct WindowSummary {
  int index = 0;
  int begin = 0;
  int count = 0;
  double initial_cost = 0.0;
  double best_cost = 0.0;
  bool diverged = false;
  int evaluations = 0;
  std::vector<CmaesGeneration> history;

  bool operator==(const WindowSummary& o) const;
};

/// Everything measured for one sequence. Optional fields are absent when the
/// corresponding input or stage was not part of the run.
struct PlausibilityReport {
  std::string sequence;
  std::string mode;  // evaluate | simulate | metrics
  int frames = 0;
  double fps = 0.0;
  double ground_height = 0.0;

  std::optional<double> cd_mm;
  std::optional<int> psd;
  std::optional<int> unbalanced;  // N
  std::optional<int> fall_frame;  // t_F
  double fs_percent = 0.0;
  double gp_mm = 0.0;
  std::optional<double> mpjpe_mm;
  std::optional<double> mpjpe_g_mm;
  std::optional<double> mpjpe_2d_px;

  bool diverged = false;
  int diverged_frame = -1;
  int simulated_frames = 0;
  std::vector<std::string> flags;  // low-confidence markers

  std::vector<WindowSummary> windows;
  std::vector<std::array<double, 2>> contact_forces;  // N per frame, [left, right]
  nlohmann::json config = nlohmann::json::object();

  bool operator==(const PlausibilityReport& o) const;
};

nlohmann::json report_to_json(const PlausibilityReport& r);
PlausibilityReport report_from_json(const nlohmann::json& j);
PlausibilityReport load_report_file(const std::filesystem::path& path);
std::string serialize_report(const PlausibilityReport& r);

std::vector<WindowSummary> summarize_windows(const std::vector<WindowTrace>& traces);

/// Stable CSV column set, one row per sequence.
std::string summary_csv_header();
std::string summary_csv_row(const PlausibilityReport& r);
std::string contact_forces_csv(const PlausibilityReport& r);
std::string cost_traces_csv(const PlausibilityReport& r);

/// Optimized targets and the simulated trajectory as generalized coordinates.
nlohmann::json trajectory_to_json(const HumanoidModel& model, const OptimizationResult& result);

/// Fixed-precision formatting used by every text artifact.
std::string format_number(double x);

}  // namespace plausim
