#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "plausim/rotation.hpp"

namespace plausim {

enum class SkeletonFormat { H36M17, NPC16, BASE23, Custom };

std::string to_string(SkeletonFormat f);
SkeletonFormat skeleton_format_from_string(const std::string& s);

enum class FootSide { Left = 0, Right = 1 };

/// Joint-name convention shared by every module: lower-case, `left_`/`right_`
/// prefixes, e.g. `left_ankle`, `right_heel`, `pelvis`, `thorax`, `head`.
struct Skeleton {
  SkeletonFormat format = SkeletonFormat::Custom;
  std::vector<std::string> joint_names;
  std::vector<int> parent_index;  // -1 for the root

  int num_joints() const { return static_cast<int>(joint_names.size()); }
  std::optional<int> find(const std::string& name) const;
  int root() const;

  /// (parent, child) pairs in a root-to-leaves order.
  std::vector<std::pair<int, int>> bones() const;

  /// Indices of ankle/toe/heel joints with their side.
  std::vector<std::pair<int, FootSide>> foot_joints() const;

  bool has_sole_joints() const;  // any toe or heel joint

  /// Throws SchemaError: single tree, parent indices valid, names unique,
  /// format-specific joint content (BASE23 has toes and heels, H36M17/NPC16 do not).
  void validate() const;
};

struct Camera {
  std::string name;
  Eigen::Matrix<double, 3, 4> projection = Eigen::Matrix<double, 3, 4>::Zero();

  Vec2 project(const Vec3& p) const;
  bool operator==(const Camera&) const = default;
};

/// T x J x 3 joint positions in meters, world frame, +Z up.
class PoseSequence {
 public:
  PoseSequence() = default;
  PoseSequence(Skeleton skeleton, double fps, int num_frames);

  const Skeleton& skeleton() const { return skeleton_; }
  double fps() const { return fps_; }
  int num_frames() const { return num_frames_; }
  int num_joints() const { return skeleton_.num_joints(); }

  Vec3& at(int t, int j) { return positions_[static_cast<size_t>(t) * num_joints() + j]; }
  const Vec3& at(int t, int j) const { return positions_[static_cast<size_t>(t) * num_joints() + j]; }

  std::span<const Vec3> frame(int t) const {
    return {positions_.data() + static_cast<size_t>(t) * num_joints(), static_cast<size_t>(num_joints())};
  }

  std::vector<Camera>& cameras() { return cameras_; }
  const std::vector<Camera>& cameras() const { return cameras_; }

  /// Joint position by name at frame t, with midpoint synthesis for pelvis
  /// (hips) and thorax/neck (shoulders). Empty if neither route applies.
  std::optional<Vec3> joint(int t, const std::string& name) const;

  /// Throws SchemaError when T < 2, fps <= 0, or any position is non-finite.
  void validate() const;

 private:
  Skeleton skeleton_;
  double fps_ = 25.0;
  int num_frames_ = 0;
  std::vector<Vec3> positions_;
  std::vector<Camera> cameras_;
};

struct GroundPlane {
  double height = 0.0;
  Vec3 normal = Vec3::UnitZ();
  bool low_confidence = false;

  double height_of(const Vec3& p) const { return p.z() - height; }
};

/// Per-frame, per-foot-joint contact flags.
struct ContactStates {
  std::vector<int> joints;        // skeleton joint index per column
  std::vector<FootSide> sides;    // side per column
  int num_frames = 0;
  std::vector<std::uint8_t> flags;  // row-major num_frames x joints.size()

  int num_columns() const { return static_cast<int>(joints.size()); }
  bool at(int t, int c) const { return flags[static_cast<size_t>(t) * joints.size() + c] != 0; }
  /// True when any joint of the given foot is in contact.
  bool foot(int t, FootSide side) const;
};

struct ContactThresholds {
  double height = 0.05;  // m
  double speed = 0.02;   // m/s
};

PoseSequence median_filter(const PoseSequence& seq, int window);
PoseSequence constrain_bone_lengths(const PoseSequence& seq);
GroundPlane estimate_ground_plane(const PoseSequence& seq);
ContactStates estimate_contact_states(const PoseSequence& seq, const GroundPlane& plane,
                                      const ContactThresholds& thresholds = {});

}  // namespace plausim
