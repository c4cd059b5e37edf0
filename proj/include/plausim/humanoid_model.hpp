#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "plausim/pose_core.hpp"
#include "plausim/rotation.hpp"

namespace plausim {

enum class JointType { Free, Fixed, Spherical, Revolute };

std::string to_string(JointType t);

/// Collision shape in link coordinates.
struct Geometry {
  enum class Kind { Capsule, Box };
  Kind kind = Kind::Capsule;
  Vec3 a = Vec3::Zero();  // capsule segment end points
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
  Vec3 center = Vec3::Zero();  // box
  Vec3 half_extents = Vec3::Zero();

  bool operator==(const Geometry&) const = default;
};

struct Joint {
  std::string name;
  JointType type = JointType::Fixed;
  Vec3 origin = Vec3::Zero();  // in parent link frame (zero pose: all link frames world-aligned)
  Vec3 axis = Vec3::UnitY();   // revolute only, unit
  double lower = -3.141592653589793;
  double upper = 3.141592653589793;
  double kp = 0.0;
  double kd = 0.0;
  double torque_limit = 0.0;  // per DOF, N*m

  bool operator==(const Joint&) const = default;
};

struct Link {
  std::string name;
  int parent = -1;
  Joint joint;
  double mass = 1.0;
  Vec3 com = Vec3::Zero();  // link frame
  Mat3 inertia = Mat3::Identity();  // about CoM, link axes
  std::vector<Geometry> geometry;
  std::optional<FootSide> foot;

  // filled by HumanoidModel::finalize
  int q_index = 0;
  int v_index = 0;
  int channel_index = 0;

  int nq() const;
  int nv() const;
  bool operator==(const Link&) const = default;
};

/// A named point fixed to a link; maps skeleton joint names onto the body.
struct Marker {
  std::string link;
  Vec3 offset = Vec3::Zero();
  bool operator==(const Marker&) const = default;
};

/// World pose of every link for one configuration.
struct LinkFrames {
  std::vector<Mat3> rotation;
  std::vector<Vec3> origin;

  Vec3 point(int link, const Vec3& local) const { return origin[link] + rotation[link] * local; }
};

/// Articulated tree: one root (free or fixed) and spherical/revolute children.
/// Links are stored parents-first. The default instance is the 28-DOF humanoid.
class HumanoidModel {
 public:
  std::string name = "humanoid";
  std::vector<Link> links;
  std::map<std::string, Marker> markers;

  /// Computes coordinate offsets. Call after editing links.
  void finalize();

  int nq() const { return nq_; }
  int nv() const { return nv_; }
  /// Euler-angle channels of the controllable joints (3 per spherical, 1 per revolute).
  int num_channels() const { return num_channels_; }
  int num_links() const { return static_cast<int>(links.size()); }
  double total_mass() const;

  std::optional<int> find_link(const std::string& link_name) const;
  std::optional<int> find_joint(const std::string& joint_name) const;  // link index owning the joint
  int link_index(const std::string& link_name) const;  // throws SchemaError

  /// Controllable joints (link indices) in channel order.
  const std::vector<int>& controlled() const { return controlled_; }
  const std::vector<int>& spherical() const { return spherical_; }
  const std::vector<int>& revolute() const { return revolute_; }

  std::optional<int> foot_link(FootSide side) const;

  /// Generalized coordinates of the zero pose at the given root position.
  Eigen::VectorXd zero_configuration(const Vec3& root_position = Vec3::Zero()) const;

  LinkFrames forward_kinematics(const Eigen::VectorXd& q) const;
  std::optional<Vec3> marker_position(const LinkFrames& frames, const std::string& marker) const;

  /// Collision sample points (capsule end spheres' lowest points along -up,
  /// box corners) in world coordinates, paired with their link.
  void collision_points(const LinkFrames& frames, const Vec3& up, std::vector<std::pair<int, Vec3>>& out) const;

  /// Vertical distance from the ankle markers to the lowest foot geometry point in the zero pose.
  double sole_clearance() const;

  /// Generic checks: masses > 0, SPD inertia, single root, parents-first order.
  void validate() const;
  /// Additionally requires exactly 1 free root, 8 spherical and 4 revolute joints,
  /// and both foot links flagged.
  void validate_humanoid() const;

  static HumanoidModel default_humanoid();

  bool operator==(const HumanoidModel& o) const { return name == o.name && links == o.links && markers == o.markers; }

 private:
  int nq_ = 0;
  int nv_ = 0;
  int num_channels_ = 0;
  std::vector<int> controlled_;
  std::vector<int> spherical_;
  std::vector<int> revolute_;
};

}  // namespace plausim
