#pragma once

#include <optional>
#include <vector>

#include "plausim/humanoid_model.hpp"
#include "plausim/humanoid_sim.hpp"
#include "plausim/pose_core.hpp"

namespace plausim {

/// Counter-clockwise convex hull without repeated or collinear vertices.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

/// Containment with the boundary counted as inside, within `tolerance` meters.
/// Degenerate hulls (point, segment) contain points within tolerance of them; an empty hull contains nothing.
bool cog_inside(const std::vector<Vec2>& hull, const Vec2& point, double tolerance = 1e-9);

struct BaseOfSupport {
  std::vector<Vec2> hull;  // ground-plane coordinates, counter-clockwise
  bool empty() const { return hull.empty(); }
};

/// Hull of contact points projected onto the plane.
BaseOfSupport base_of_support(const std::vector<Vec3>& contact_points, const GroundPlane& plane);
/// Hull of the foot collision points of a snapshot that touch the ground.
BaseOfSupport base_of_support(const Snapshot& snapshot, const HumanoidModel& model, const GroundPlane& plane);

/// Mean L2 distance between two CoM trajectories, in mm.
double com_distance(const std::vector<Vec3>& kinematic, const std::vector<Vec3>& simulated);

struct StabilityFrame {
  Vec3 com = Vec3::Zero();                      // simulated
  Vec3 kinematic_com_velocity = Vec3::Zero();
  BaseOfSupport support;
  bool non_foot_contact = false;
};

struct StabilityResult {
  int psd = 0;
  int num_frames = 0;      // T
  int unbalanced = 0;      // N
  int fall_frame = 0;      // t_F, T when no fall
};

/// PSD_T = min(T - N, t_F). Frames missing from `frames` (a diverged simulation) count as a fall
/// at the first missing frame.
StabilityResult pose_stability_duration(const std::vector<StabilityFrame>& frames, int num_frames,
                                        double stationary_speed = 0.25);

/// Builds stability frames from simulated snapshots and kinematic CoM velocities.
std::vector<StabilityFrame> stability_frames(const std::vector<Snapshot>& snapshots,
                                             const std::vector<Vec3>& kinematic_com_velocity,
                                             const HumanoidModel& model, const GroundPlane& plane);

/// Percentage of frames in which an in-contact foot joint moved horizontally more than
/// `threshold` meters since the previous frame.
double footskate(const PoseSequence& seq, const ContactStates& contacts, const GroundPlane& plane,
                 double threshold = 0.02);

/// Mean depth of joint instances strictly below the plane, in mm; 0 when none penetrate.
double ground_penetration(const PoseSequence& seq, const GroundPlane& plane);

struct MpjpeResult {
  double mpjpe = 0.0;    // mm, root-relative
  double mpjpe_g = 0.0;  // mm, global
  std::optional<double> mpjpe_2d;  // pixels, absent without cameras
  std::vector<std::string> joints;  // mutual joints used
};

/// Errors over the joints present in both skeletons. The root is the pelvis
/// (synthesized from the hips when absent). Throws SchemaError without mutual joints.
MpjpeResult mpjpe_family(const PoseSequence& pred, const PoseSequence& gt, const std::vector<Camera>& cameras);

}  // namespace plausim
