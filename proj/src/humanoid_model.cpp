#include "plausim/humanoid_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "plausim/errors.hpp"

namespace plausim {

std::string to_string(JointType t) {
  switch (t) {
    case JointType::Free: return "free";
    case JointType::Fixed: return "fixed";
    case JointType::Spherical: return "spherical";
    case JointType::Revolute: return "revolute";
  }
  return "fixed";
}

int Link::nq() const {
  switch (joint.type) {
    case JointType::Free: return 7;
    case JointType::Fixed: return 0;
    case JointType::Spherical: return 4;
    case JointType::Revolute: return 1;
  }
  return 0;
}

int Link::nv() const {
  switch (joint.type) {
    case JointType::Free: return 6;
    case JointType::Fixed: return 0;
    case JointType::Spherical: return 3;
    case JointType::Revolute: return 1;
  }
  return 0;
}

void HumanoidModel::finalize() {
  nq_ = nv_ = num_channels_ = 0;
  controlled_.clear();
  spherical_.clear();
  revolute_.clear();
  for (int i = 0; i < num_links(); ++i) {
    Link& l = links[i];
    l.q_index = nq_;
    l.v_index = nv_;
    l.channel_index = num_channels_;
    nq_ += l.nq();
    nv_ += l.nv();
    if (l.joint.type == JointType::Spherical) {
      controlled_.push_back(i);
      spherical_.push_back(i);
      num_channels_ += 3;
    } else if (l.joint.type == JointType::Revolute) {
      controlled_.push_back(i);
      revolute_.push_back(i);
      num_channels_ += 1;
    }
  }
}

double HumanoidModel::total_mass() const {
  double m = 0.0;
  for (const auto& l : links) m += l.mass;
  return m;
}

std::optional<int> HumanoidModel::find_link(const std::string& link_name) const {
  for (int i = 0; i < num_links(); ++i)
    if (links[i].name == link_name) return i;
  return std::nullopt;
}

std::optional<int> HumanoidModel::find_joint(const std::string& joint_name) const {
  for (int i = 0; i < num_links(); ++i)
    if (links[i].joint.name == joint_name) return i;
  return std::nullopt;
}

int HumanoidModel::link_index(const std::string& link_name) const {
  if (auto i = find_link(link_name)) return *i;
  throw SchemaError("model has no link named '" + link_name + "'");
}

std::optional<int> HumanoidModel::foot_link(FootSide side) const {
  for (int i = 0; i < num_links(); ++i)
    if (links[i].foot && *links[i].foot == side) return i;
  return std::nullopt;
}

Eigen::VectorXd HumanoidModel::zero_configuration(const Vec3& root_position) const {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nq_);
  for (const Link& l : links) {
    switch (l.joint.type) {
      case JointType::Free:
        q.segment<3>(l.q_index) = root_position;
        q[l.q_index + 3] = 1.0;
        break;
      case JointType::Spherical: q[l.q_index] = 1.0; break;
      default: break;
    }
  }
  return q;
}

static Quat read_quat(const Eigen::VectorXd& q, int i) { return Quat(q[i], q[i + 1], q[i + 2], q[i + 3]); }

LinkFrames HumanoidModel::forward_kinematics(const Eigen::VectorXd& q) const {
  LinkFrames f;
  f.rotation.resize(links.size());
  f.origin.resize(links.size());
  for (int i = 0; i < num_links(); ++i) {
    const Link& l = links[i];
    Mat3 Rp = Mat3::Identity();
    Vec3 op = Vec3::Zero();
    if (l.parent >= 0) {
      Rp = f.rotation[l.parent];
      op = f.origin[l.parent];
    }
    switch (l.joint.type) {
      case JointType::Free:
        f.origin[i] = q.segment<3>(l.q_index);
        f.rotation[i] = read_quat(q, l.q_index + 3).normalized().toRotationMatrix();
        break;
      case JointType::Fixed:
        f.origin[i] = op + Rp * l.joint.origin;
        f.rotation[i] = Rp;
        break;
      case JointType::Spherical:
        f.origin[i] = op + Rp * l.joint.origin;
        f.rotation[i] = Rp * read_quat(q, l.q_index).normalized().toRotationMatrix();
        break;
      case JointType::Revolute:
        f.origin[i] = op + Rp * l.joint.origin;
        f.rotation[i] = Rp * Eigen::AngleAxisd(q[l.q_index], l.joint.axis).toRotationMatrix();
        break;
    }
  }
  return f;
}

std::optional<Vec3> HumanoidModel::marker_position(const LinkFrames& frames, const std::string& marker) const {
  auto it = markers.find(marker);
  if (it == markers.end()) return std::nullopt;
  const int li = link_index(it->second.link);
  return frames.point(li, it->second.offset);
}

void HumanoidModel::collision_points(const LinkFrames& frames, const Vec3& up,
                                     std::vector<std::pair<int, Vec3>>& out) const {
  out.clear();
  for (int i = 0; i < num_links(); ++i) {
    for (const Geometry& g : links[i].geometry) {
      if (g.kind == Geometry::Kind::Capsule) {
        out.emplace_back(i, frames.point(i, g.a) - g.radius * up);
        if (g.b != g.a) out.emplace_back(i, frames.point(i, g.b) - g.radius * up);
      } else {
        for (int c = 0; c < 8; ++c) {
          const Vec3 s((c & 1) ? 1.0 : -1.0, (c & 2) ? 1.0 : -1.0, (c & 4) ? 1.0 : -1.0);
          out.emplace_back(i, frames.point(i, g.center + s.cwiseProduct(g.half_extents)));
        }
      }
    }
  }
}

double HumanoidModel::sole_clearance() const {
  const LinkFrames f = forward_kinematics(zero_configuration());
  std::vector<std::pair<int, Vec3>> pts;
  collision_points(f, Vec3::UnitZ(), pts);
  double clearance = 0.0;
  int n = 0;
  for (FootSide side : {FootSide::Left, FootSide::Right}) {
    auto foot = foot_link(side);
    auto ankle = marker_position(f, side == FootSide::Left ? "left_ankle" : "right_ankle");
    if (!foot || !ankle) continue;
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& [li, p] : pts)
      if (li == *foot) lowest = std::min(lowest, p.z());
    clearance += ankle->z() - lowest;
    ++n;
  }
  return n > 0 ? clearance / n : 0.0;
}

void HumanoidModel::validate() const {
  if (links.empty()) throw SchemaError("model has no links");
  for (int i = 0; i < num_links(); ++i) {
    const Link& l = links[i];
    const bool is_root = (i == 0);
    if (is_root != (l.parent < 0)) throw SchemaError("link '" + l.name + "': only the first link may be the root");
    if (!is_root && l.parent >= i) throw SchemaError("link '" + l.name + "': parent must precede child");
    if (is_root && l.joint.type != JointType::Free && l.joint.type != JointType::Fixed)
      throw SchemaError("root link '" + l.name + "' must have a free or fixed joint");
    if (!is_root && (l.joint.type == JointType::Free))
      throw SchemaError("link '" + l.name + "': free joints are only allowed at the root");
    if (!(l.mass > 0.0)) throw SchemaError("link '" + l.name + "': mass must be positive");
    if ((l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw SchemaError("link '" + l.name + "': inertia must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(l.inertia);
    if (es.eigenvalues().minCoeff() <= 0.0) throw SchemaError("link '" + l.name + "': inertia must be positive definite");
    if (l.joint.type == JointType::Revolute && std::abs(l.joint.axis.norm() - 1.0) > 1e-9)
      throw SchemaError("joint '" + l.joint.name + "': axis must be unit length");
    if (l.joint.kp < 0.0 || l.joint.kd < 0.0 || l.joint.torque_limit < 0.0)
      throw SchemaError("joint '" + l.joint.name + "': gains and limits must be non-negative");
  }
  for (const auto& [name, m] : markers)
    if (!find_link(m.link)) throw SchemaError("marker '" + name + "' references unknown link '" + m.link + "'");
}

void HumanoidModel::validate_humanoid() const {
  validate();
  if (links[0].joint.type != JointType::Free) throw SchemaError("humanoid root must be a free joint");
  if (spherical_.size() != 8 || revolute_.size() != 4)
    throw SchemaError("humanoid requires 8 spherical and 4 revolute joints, found " +
                      std::to_string(spherical_.size()) + " and " + std::to_string(revolute_.size()));
  if (num_channels_ != 28) throw SchemaError("humanoid requires 28 controllable DOF");
  if (!foot_link(FootSide::Left) || !foot_link(FootSide::Right))
    throw SchemaError("humanoid requires flagged left and right foot links");
}

namespace {

// Solid cylinder of the capsule's full length about its center.
Mat3 capsule_inertia(double mass, const Vec3& a, const Vec3& b, double r) {
  const Vec3 d = b - a;
  const double len = d.norm() + 2.0 * r;
  const double axial = 0.5 * mass * r * r;
  const double perp = mass * (3.0 * r * r + len * len) / 12.0;
  if (d.norm() < 1e-12) {
    const double s = 0.4 * mass * r * r;
    return s * Mat3::Identity();
  }
  const Vec3 u = d.normalized();
  return perp * Mat3::Identity() + (axial - perp) * u * u.transpose();
}

Mat3 box_inertia(double mass, const Vec3& h) {
  const Vec3 e = 2.0 * h;
  Mat3 I = Mat3::Zero();
  I(0, 0) = mass * (e.y() * e.y() + e.z() * e.z()) / 12.0;
  I(1, 1) = mass * (e.x() * e.x() + e.z() * e.z()) / 12.0;
  I(2, 2) = mass * (e.x() * e.x() + e.y() * e.y()) / 12.0;
  return I;
}

Geometry capsule(Vec3 a, Vec3 b, double r) {
  Geometry g;
  g.kind = Geometry::Kind::Capsule;
  g.a = a;
  g.b = b;
  g.radius = r;
  return g;
}

Geometry box(Vec3 c, Vec3 h) {
  Geometry g;
  g.kind = Geometry::Kind::Box;
  g.center = c;
  g.half_extents = h;
  return g;
}

Joint joint(std::string name, JointType type, Vec3 origin, double kp, double limit) {
  Joint j;
  j.name = std::move(name);
  j.type = type;
  j.origin = origin;
  j.kp = kp;
  j.kd = kp / 10.0;
  j.torque_limit = limit;
  return j;
}

}  // namespace

HumanoidModel HumanoidModel::default_humanoid() {
  // 72 kg body; segment mass fractions after de Leva (male).
  constexpr double kMass = 72.0;
  constexpr double kUpperLimit = 100.0;
  constexpr double kLowerLimit = 200.0;

  HumanoidModel m;
  m.name = "humanoid28";

  auto add = [&](std::string name, int parent, Joint j, double fraction, Vec3 com, Geometry geom) {
    Link l;
    l.name = std::move(name);
    l.parent = parent;
    l.joint = std::move(j);
    l.mass = fraction * kMass;
    l.com = com;
    l.geometry.push_back(geom);
    if (geom.kind == Geometry::Kind::Capsule)
      l.inertia = capsule_inertia(l.mass, geom.a, geom.b, geom.radius);
    else
      l.inertia = box_inertia(l.mass, geom.half_extents);
    m.links.push_back(std::move(l));
    return static_cast<int>(m.links.size()) - 1;
  };

  Joint root;
  root.name = "root";
  root.type = JointType::Free;
  const int pelvis = add("pelvis", -1, root, 0.1117, {0, 0, 0.03125},
                         capsule({0, -0.0625, 0.03125}, {0, 0.0625, 0.03125}, 0.09375));
  const int chest = add("chest", pelvis, joint("chest", JointType::Spherical, {0, 0, 0.125}, 500, kUpperLimit),
                        0.3229, {0, 0, 0.17}, capsule({0, 0, 0.0625}, {0, 0, 0.25}, 0.125));
  add("head", chest, joint("neck", JointType::Spherical, {0, 0, 0.375}, 200, kUpperLimit), 0.0694, {0, 0, 0.125},
      capsule({0, 0, 0.125}, {0, 0, 0.125}, 0.1));

  for (FootSide side : {FootSide::Right, FootSide::Left}) {
    const std::string s = side == FootSide::Right ? "right_" : "left_";
    const double y = side == FootSide::Right ? -1.0 : 1.0;

    const int upper = add(s + "upper_arm", chest,
                          joint(s + "shoulder", JointType::Spherical, {0, y * 0.1875, 0.3125}, 400, kUpperLimit),
                          0.0271, {0, 0, -0.13}, capsule({0, 0, -0.03}, {0, 0, -0.25}, 0.045));
    Joint elbow = joint(s + "elbow", JointType::Revolute, {0, 0, -0.28125}, 200, kUpperLimit);
    elbow.axis = -Vec3::UnitY();  // positive = flexion (forearm swings forward)
    elbow.lower = -0.1;
    elbow.upper = 2.6;
    add(s + "forearm", upper, elbow, 0.0223, {0, 0, -0.17}, capsule({0, 0, -0.03}, {0, 0, -0.38}, 0.04));

    const int thigh = add(s + "thigh", pelvis,
                          joint(s + "hip", JointType::Spherical, {0, y * 0.09375, 0}, 500, kLowerLimit), 0.1416,
                          {0, 0, -0.19}, capsule({0, 0, -0.05}, {0, 0, -0.38}, 0.065));
    Joint knee = joint(s + "knee", JointType::Revolute, {0, 0, -0.4375}, 500, kLowerLimit);
    knee.axis = Vec3::UnitY();  // positive = flexion (shin swings backward)
    knee.lower = -0.1;
    knee.upper = 2.6;
    const int shin = add(s + "shin", thigh, knee, 0.0433, {0, 0, -0.19}, capsule({0, 0, -0.04}, {0, 0, -0.36}, 0.05));
    const int foot = add(s + "foot", shin, joint(s + "ankle", JointType::Spherical, {0, 0, -0.4375}, 1600, kLowerLimit),
                         0.0137, {0.03125, 0, -0.03125}, box({0.03125, 0, -0.03125}, {0.125, 0.046875, 0.03125}));
    m.links[foot].foot = side;
  }

  m.markers = {
      {"pelvis", {"pelvis", {0, 0, 0}}},
      {"right_hip", {"pelvis", {0, -0.09375, 0}}},
      {"left_hip", {"pelvis", {0, 0.09375, 0}}},
      {"thorax", {"chest", {0, 0, 0.3125}}},
      {"head", {"head", {0, 0, 0.25}}},
  };
  for (const std::string s : {"right_", "left_"}) {
    const double y = s == "right_" ? -1.0 : 1.0;
    m.markers[s + "shoulder"] = {"chest", {0, y * 0.1875, 0.3125}};
    m.markers[s + "elbow"] = {s + "upper_arm", {0, 0, -0.28125}};
    m.markers[s + "wrist"] = {s + "forearm", {0, 0, -0.25}};
    m.markers[s + "knee"] = {s + "thigh", {0, 0, -0.4375}};
    m.markers[s + "ankle"] = {s + "shin", {0, 0, -0.4375}};
    m.markers[s + "heel"] = {s + "foot", {-0.09375, 0, -0.0625}};
    m.markers[s + "toe"] = {s + "foot", {0.15625, 0, -0.0625}};
  }
  m.finalize();
  return m;
}

}  // namespace plausim
