#include "fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

namespace plausim::fixtures {

namespace {

struct JointSpec {
  const char* name;
  const char* parent;
};

constexpr JointSpec kJoints[] = {
    {"pelvis", nullptr},         {"left_hip", "pelvis"},        {"right_hip", "pelvis"},
    {"left_knee", "left_hip"},   {"right_knee", "right_hip"},   {"left_ankle", "left_knee"},
    {"right_ankle", "right_knee"}, {"thorax", "pelvis"},        {"head", "thorax"},
    {"left_shoulder", "thorax"}, {"right_shoulder", "thorax"},  {"left_elbow", "left_shoulder"},
    {"right_elbow", "right_shoulder"}, {"left_wrist", "left_elbow"}, {"right_wrist", "right_elbow"},
    {"left_heel", "left_ankle"}, {"right_heel", "right_ankle"}, {"left_toe", "left_ankle"},
    {"right_toe", "right_ankle"},
};

double lowest_non_foot_height(const HumanoidModel& model, const Eigen::VectorXd& q) {
  std::vector<std::pair<int, Vec3>> pts;
  model.collision_points(model.forward_kinematics(q), Vec3::UnitZ(), pts);
  double low = std::numeric_limits<double>::infinity();
  for (const auto& [link, p] : pts)
    if (!model.links[link].foot) low = std::min(low, p.z());
  return low;
}

}  // namespace

Skeleton marker_skeleton(bool soles) {
  Skeleton sk;
  sk.format = soles ? SkeletonFormat::BASE23 : SkeletonFormat::Custom;
  for (const JointSpec& j : kJoints) {
    const std::string name = j.name;
    if (!soles && (name.ends_with("heel") || name.ends_with("toe"))) continue;
    sk.joint_names.push_back(name);
  }
  for (const std::string& name : sk.joint_names) {
    const char* parent = nullptr;
    for (const JointSpec& j : kJoints)
      if (name == j.name) parent = j.parent;
    sk.parent_index.push_back(parent ? *sk.find(parent) : -1);
  }
  return sk;
}

PoseSequence sequence_from_configurations(const HumanoidModel& model, const std::vector<Eigen::VectorXd>& qs,
                                          double fps, bool soles) {
  PoseSequence seq(marker_skeleton(soles), fps, static_cast<int>(qs.size()));
  for (size_t t = 0; t < qs.size(); ++t) {
    const LinkFrames f = model.forward_kinematics(qs[t]);
    for (int j = 0; j < seq.num_joints(); ++j)
      seq.at(static_cast<int>(t), j) = *model.marker_position(f, seq.skeleton().joint_names[j]);
  }
  return seq;
}

double standing_root_height(const HumanoidModel& model) {
  std::vector<std::pair<int, Vec3>> pts;
  model.collision_points(model.forward_kinematics(model.zero_configuration()), Vec3::UnitZ(), pts);
  double low = std::numeric_limits<double>::infinity();
  for (const auto& [link, p] : pts) low = std::min(low, p.z());
  return -low;
}

void set_rotation(const HumanoidModel& model, KinematicPose& pose, const std::string& joint, const Quat& r) {
  const int li = *model.find_joint(joint);
  const auto& s = model.spherical();
  pose.rotations[std::find(s.begin(), s.end(), li) - s.begin()] = r;
}

void set_angle(const HumanoidModel& model, KinematicPose& pose, const std::string& joint, double angle) {
  const int li = *model.find_joint(joint);
  const auto& r = model.revolute();
  pose.angles[std::find(r.begin(), r.end(), li) - r.begin()] = angle;
}

PoseSequence standing_sequence(const HumanoidModel& model, int frames, double fps, bool soles) {
  const Eigen::VectorXd q = model.zero_configuration(Vec3(0, 0, standing_root_height(model)));
  return sequence_from_configurations(model, std::vector<Eigen::VectorXd>(frames, q), fps, soles);
}

ScriptedFall scripted_fall(const HumanoidModel& model, int frames, double fps, double initial_rate) {
  const double h = standing_root_height(model);
  const Eigen::VectorXd q0 = model.zero_configuration(Vec3(0, 0, h));
  const LinkFrames f0 = model.forward_kinematics(q0);

  // Pivot: front edge of the soles.
  std::vector<std::pair<int, Vec3>> pts;
  model.collision_points(f0, Vec3::UnitZ(), pts);
  double pivot_x = -std::numeric_limits<double>::infinity();
  for (const auto& [link, p] : pts)
    if (model.links[link].foot) pivot_x = std::max(pivot_x, p.x());
  const Vec3 pivot(pivot_x, 0, 0);

  double mass = 0.0, inertia = 0.0;
  Vec3 com = Vec3::Zero();
  for (int i = 0; i < model.num_links(); ++i) {
    const Link& l = model.links[i];
    const Vec3 c = f0.point(i, l.com) - pivot;
    mass += l.mass;
    com += l.mass * c;
    const Mat3 I = f0.rotation[i] * l.inertia * f0.rotation[i].transpose();
    inertia += I(1, 1) + l.mass * (c.x() * c.x() + c.z() * c.z());
  }
  com /= mass;
  const double g = 9.81;
  // Rotation about +y by theta tips the body forward; torque = m g x_com(theta).
  auto accel = [&](double th) { return mass * g * (com.x() * std::cos(th) + com.z() * std::sin(th)) / inertia; };
  const double balance = std::atan2(-com.x(), com.z());

  auto configuration = [&](double th) {
    const Quat r(Eigen::AngleAxisd(th, Vec3::UnitY()));
    const Vec3 root = pivot + r * (Vec3(0, 0, h) - pivot);
    Eigen::VectorXd q = q0;
    const int qi = model.links[0].q_index;
    q.segment<3>(qi) = root;
    q[qi + 3] = r.w();
    q[qi + 4] = r.x();
    q[qi + 5] = r.y();
    q[qi + 6] = r.z();
    return q;
  };

  ScriptedFall out;
  double th = balance, w = initial_rate;
  const int substeps = 100;
  const double dt = 1.0 / (fps * substeps);
  bool frozen = false;
  for (int t = 0; t < frames; ++t) {
    const Eigen::VectorXd q = configuration(th);
    if (!frozen && lowest_non_foot_height(model, q) <= 0.0) {
      frozen = true;
      out.contact_frame = t;
    }
    out.q.push_back(q);
    if (frozen) continue;
    for (int s = 0; s < substeps; ++s) {
      const double k1t = w, k1w = accel(th);
      const double k2t = w + 0.5 * dt * k1w, k2w = accel(th + 0.5 * dt * k1t);
      const double k3t = w + 0.5 * dt * k2w, k3w = accel(th + 0.5 * dt * k2t);
      const double k4t = w + dt * k3w, k4w = accel(th + dt * k3t);
      th += dt / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t);
      w += dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
    }
  }
  out.sequence = sequence_from_configurations(model, out.q, fps, true);
  return out;
}

PoseSequence weight_shift_sequence(const HumanoidModel& model, int frames, double fps, double period, double sway,
                                   double hip_flex) {
  const double h = standing_root_height(model);
  const LinkFrames f0 = model.forward_kinematics(model.zero_configuration());
  const double leg = (*model.marker_position(f0, "left_hip") - *model.marker_position(f0, "left_ankle")).norm();

  std::vector<Eigen::VectorXd> qs;
  for (int t = 0; t < frames; ++t) {
    const double phase = 2.0 * std::numbers::pi * t / (fps * period);
    const double d = sway * std::sin(phase);  // +y: weight over the left foot
    const double roll = std::asin(-d / leg);  // both legs lean so the ankles stay put
    // The unloaded foot lifts while the sway is past 60% of its amplitude.
    const double s = std::sin(phase);
    const double lift = std::clamp((std::abs(s) - 0.6) / 0.4, 0.0, 1.0);
    const double bump = lift * lift * (3.0 - 2.0 * lift);

    KinematicPose pose = zero_pose(model);
    pose.root_position = Vec3(0, d, h - leg * (1.0 - std::cos(roll)));
    for (const std::string side : {"left_", "right_"}) {
      const bool swing = (side == "right_") == (s > 0);
      const double flex = swing ? -hip_flex * bump : 0.0;  // negative pitch moves the thigh forward
      const double knee = -2.0 * flex;
      const Quat hip = Quat(Eigen::AngleAxisd(roll, Vec3::UnitX())) * Quat(Eigen::AngleAxisd(flex, Vec3::UnitY()));
      const Quat ankle =
          Quat(Eigen::AngleAxisd(-flex - knee, Vec3::UnitY())) * Quat(Eigen::AngleAxisd(-roll, Vec3::UnitX()));
      set_rotation(model, pose, side + "hip", hip);
      set_angle(model, pose, side + "knee", knee);
      set_rotation(model, pose, side + "ankle", ankle);
    }
    qs.push_back(to_coordinates(model, pose));
  }
  return sequence_from_configurations(model, qs, fps, true);
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("plausim_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace plausim::fixtures
