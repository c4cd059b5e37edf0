#pragma once

#include <vector>

#include <Eigen/Core>

#include "plausim/humanoid_model.hpp"
#include "plausim/pose_core.hpp"
#include "plausim/rotation.hpp"

namespace plausim {

/// Humanoid kinematic pose: root transform plus one orientation per spherical
/// joint and one hinge angle per revolute joint (model order).
struct KinematicPose {
  Vec3 root_position = Vec3::Zero();
  Quat root_orientation = Quat::Identity();
  std::vector<Quat> rotations;  // per spherical joint, unit, canonical sign
  std::vector<double> angles;   // per revolute joint, radians, positive = flexion
};

/// Root linear velocity is world-frame; all angular velocities are expressed
/// in the child (local) frame.
struct KinematicVelocity {
  Vec3 root_linear = Vec3::Zero();
  Vec3 root_angular = Vec3::Zero();
  std::vector<Vec3> angular;  // per spherical joint
  std::vector<double> rates;  // per revolute joint
};

struct KinematicTrajectory {
  double fps = 25.0;
  std::vector<KinematicPose> poses;
  std::vector<KinematicVelocity> velocities;
  /// Ankles were set to the neutral pose (no toe/heel observations).
  bool neutral_ankles = false;

  int num_frames() const { return static_cast<int>(poses.size()); }
};

KinematicPose zero_pose(const HumanoidModel& model, const Vec3& root_position = Vec3::Zero());

/// Pose and velocity to/from the simulator's generalized coordinates.
Eigen::VectorXd to_coordinates(const HumanoidModel& model, const KinematicPose& pose);
Eigen::VectorXd to_velocities(const HumanoidModel& model, const KinematicVelocity& vel);
KinematicPose pose_from_coordinates(const HumanoidModel& model, const Eigen::VectorXd& q);
KinematicVelocity velocity_from_coordinates(const HumanoidModel& model, const Eigen::VectorXd& v);

/// Intrinsic-XYZ Euler angles of every controllable joint (3 per spherical,
/// 1 per revolute), in channel order.
Eigen::VectorXd joint_channels(const HumanoidModel& model, const KinematicPose& pose);
void apply_joint_channels(const HumanoidModel& model, const Eigen::VectorXd& channels, KinematicPose& pose);

/// Change-of-basis initialization along the kinematic tree:
/// pelvis -> chest -> neck, pelvis -> hips -> knees -> ankles, chest -> shoulders -> elbows.
/// Throws SchemaError naming a required joint that is neither present nor synthesizable.
/// Velocities are filled by finite differences.
KinematicTrajectory initialize_kinematics(const PoseSequence& seq, const HumanoidModel& model);

/// First-order forward differences; the last frame copies the previous one.
KinematicTrajectory finite_difference_velocities(KinematicTrajectory traj, double fps);

}  // namespace plausim
