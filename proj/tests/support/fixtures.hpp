#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "plausim/humanoid_model.hpp"
#include "plausim/kinematics.hpp"
#include "plausim/pose_core.hpp"

namespace plausim::fixtures {

/// Joints observed on the default humanoid's markers, rooted at the pelvis.
/// Without soles the skeleton stops at the ankles.
Skeleton marker_skeleton(bool soles);

/// Marker positions of the model posed at each configuration.
PoseSequence sequence_from_configurations(const HumanoidModel& model, const std::vector<Eigen::VectorXd>& qs,
                                          double fps, bool soles);

/// Root height at which the zero pose stands with its soles at z = 0.
double standing_root_height(const HumanoidModel& model);

void set_rotation(const HumanoidModel& model, KinematicPose& pose, const std::string& joint, const Quat& r);
void set_angle(const HumanoidModel& model, KinematicPose& pose, const std::string& joint, double angle);

PoseSequence standing_sequence(const HumanoidModel& model, int frames, double fps, bool soles = true);

struct ScriptedFall {
  PoseSequence sequence;
  std::vector<Eigen::VectorXd> q;
  /// First frame at which a non-foot collision point reaches the floor.
  int contact_frame = -1;
};

/// Rigid zero-pose body toppling forward about its toe edge (RK4 pendulum with the
/// body's own inertia), frozen once any non-foot geometry reaches the floor.
ScriptedFall scripted_fall(const HumanoidModel& model, int frames, double fps, double initial_rate = 0.6);

/// Lateral sway over alternating stance feet with the unloaded foot lifted.
/// Feet stay planted while loaded; y sway amplitude `sway` m, `period` s per left-right cycle.
PoseSequence weight_shift_sequence(const HumanoidModel& model, int frames, double fps, double period = 1.6,
                                   double sway = 0.035, double hip_flex = 0.15);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace plausim::fixtures
