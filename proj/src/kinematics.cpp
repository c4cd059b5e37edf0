#include "plausim/kinematics.hpp"

#include <cmath>
#include <map>

#include "plausim/errors.hpp"

namespace plausim {

namespace {

// Below this hinge bend the limb plane is ill-conditioned and the upper
// segment only swings with its parent.
constexpr double kMinBendSine = 0.05;

Quat read_quat(const Eigen::VectorXd& q, int i) { return Quat(q[i], q[i + 1], q[i + 2], q[i + 3]); }

void write_quat(Eigen::VectorXd& q, int i, const Quat& r) {
  const Quat c = canonical(r);
  q[i] = c.w();
  q[i + 1] = c.x();
  q[i + 2] = c.y();
  q[i + 3] = c.z();
}

class FrameInit {
 public:
  FrameInit(const PoseSequence& seq, const HumanoidModel& model) : seq_(seq), model_(model) {
    zero_frames_ = model.forward_kinematics(model.zero_configuration());
    pelvis_ = model.link_index("pelvis");
    chest_ = model.link_index("chest");
    head_ = model.link_index("head");
    const std::vector<std::string> required = {
        "left_hip", "right_hip", "left_knee", "right_knee", "left_ankle", "right_ankle",
        "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
        "pelvis", "thorax"};
    for (const auto& name : required)
      if (!seq.joint(0, name)) throw SchemaError("pose sequence is missing required joint '" + name + "'");
    for (const char* s : {"left_", "right_"}) {
      const std::string p(s);
      const bool toe = seq.skeleton().find(p + "toe") || seq.skeleton().find(p + "big_toe");
      sole_[p] = toe && seq.skeleton().find(p + "heel");
    }
    has_head_ = seq.skeleton().find("head").has_value();
  }

  bool any_neutral_ankle() const { return !sole_.at("left_") || !sole_.at("right_"); }

  KinematicPose operator()(int t) const {
    std::vector<Mat3> W(model_.num_links(), Mat3::Identity());

    const Vec3 pelvis = at(t, "pelvis");
    const Vec3 thorax = at(t, "thorax");
    W[pelvis_] = basis_from_joints(thorax, pelvis, at(t, "right_hip")) *
                 basis_from_joints(zero("thorax"), zero("pelvis"), zero("right_hip")).transpose();
    W[chest_] = basis_from_joints(pelvis, thorax, at(t, "right_shoulder")) *
                basis_from_joints(zero("pelvis"), zero("thorax"), zero("right_shoulder")).transpose();
    if (has_head_) {
      // Head direction from the neck joint, located rigidly from the thorax marker.
      const Vec3 neck0 = zero_frames_.origin[head_];
      const Vec3 neck = thorax + W[chest_] * (neck0 - zero("thorax"));
      const Vec3 d0 = W[chest_] * (zero("head") - neck0).normalized();
      const Vec3 d = (at(t, "head") - neck).normalized();
      W[head_] = swing_between(d0, d).toRotationMatrix() * W[chest_];
    } else {
      W[head_] = W[chest_];
    }

    std::vector<double> hinge(model_.num_links(), 0.0);
    for (const std::string s : {"left_", "right_"}) {
      limb(t, W, hinge, chest_, s + "upper_arm", s + "forearm", s + "shoulder", s + "elbow", s + "wrist");
      limb(t, W, hinge, pelvis_, s + "thigh", s + "shin", s + "hip", s + "knee", s + "ankle");
      const int foot = model_.link_index(s + "foot");
      const int shin = model_.link_index(s + "shin");
      if (sole_.at(s)) {
        const std::string toe = seq_.skeleton().find(s + "toe") ? s + "toe" : s + "big_toe";
        W[foot] = basis_from_joints(at(t, s + "ankle"), at(t, s + "heel"), at(t, toe)) *
                  basis_from_joints(zero(s + "ankle"), zero(s + "heel"), zero(s + "toe")).transpose();
      } else {
        W[foot] = W[shin];
      }
    }

    KinematicPose pose;
    pose.root_orientation = canonical(Quat(W[pelvis_]));
    const Marker& pm = model_.markers.at("pelvis");
    pose.root_position = pelvis - W[pelvis_] * pm.offset;
    for (int li : model_.spherical()) {
      const int p = model_.links[li].parent;
      pose.rotations.push_back(canonical(Quat(Mat3(W[p].transpose() * W[li]))));
    }
    for (int li : model_.revolute()) pose.angles.push_back(hinge[li]);
    return pose;
  }

 private:
  Vec3 at(int t, const std::string& name) const {
    if (auto p = seq_.joint(t, name)) return *p;
    throw SchemaError("pose sequence is missing required joint '" + name + "'");
  }

  Vec3 zero(const std::string& marker) const {
    if (auto p = model_.marker_position(zero_frames_, marker)) return *p;
    throw SchemaError("model has no marker '" + marker + "'");
  }

  // Spherical upper segment followed by a revolute lower segment.
  void limb(int t, std::vector<Mat3>& W, std::vector<double>& hinge, int parent, const std::string& upper_name,
            const std::string& lower_name, const std::string& a, const std::string& b, const std::string& c) const {
    const int upper = model_.link_index(upper_name);
    const int lower = model_.link_index(lower_name);
    const Vec3& axis = model_.links[lower].joint.axis;
    const Vec3 pa = at(t, a), pb = at(t, b), pc = at(t, c);
    const Vec3 d1 = (pb - pa).normalized();
    const Vec3 d2 = (pc - pb).normalized();
    const Vec3 d1_zero = (zero(b) - zero(a)).normalized();
    const Vec3 bend = d1.cross(d2);
    if (bend.norm() > kMinBendSine) {
      Mat3 B0;
      B0.col(0) = -d1_zero;
      B0.col(1) = axis;  // zero pose: link frames are world-aligned
      B0.col(2) = B0.col(0).cross(B0.col(1));
      W[upper] = basis_from_joints(pc, pb, pa) * B0.transpose();
    } else {
      W[upper] = swing_between(W[parent] * d1_zero, d1).toRotationMatrix() * W[parent];
    }
    const Vec3 axis_world = W[upper] * axis;
    const double angle = std::atan2(bend.dot(axis_world), d1.dot(d2));
    hinge[lower] = angle;
    W[lower] = W[upper] * Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  }

  const PoseSequence& seq_;
  const HumanoidModel& model_;
  LinkFrames zero_frames_;
  int pelvis_ = 0, chest_ = 0, head_ = 0;
  std::map<std::string, bool> sole_;
  bool has_head_ = false;
};

}  // namespace

KinematicPose zero_pose(const HumanoidModel& model, const Vec3& root_position) {
  KinematicPose p;
  p.root_position = root_position;
  p.rotations.assign(model.spherical().size(), Quat::Identity());
  p.angles.assign(model.revolute().size(), 0.0);
  return p;
}

Eigen::VectorXd to_coordinates(const HumanoidModel& model, const KinematicPose& pose) {
  Eigen::VectorXd q = model.zero_configuration();
  const Link& root = model.links[0];
  if (root.joint.type == JointType::Free) {
    q.segment<3>(root.q_index) = pose.root_position;
    write_quat(q, root.q_index + 3, pose.root_orientation);
  }
  for (size_t k = 0; k < model.spherical().size(); ++k)
    write_quat(q, model.links[model.spherical()[k]].q_index, pose.rotations.at(k));
  for (size_t k = 0; k < model.revolute().size(); ++k) q[model.links[model.revolute()[k]].q_index] = pose.angles.at(k);
  return q;
}

Eigen::VectorXd to_velocities(const HumanoidModel& model, const KinematicVelocity& vel) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(model.nv());
  const Link& root = model.links[0];
  if (root.joint.type == JointType::Free) {
    v.segment<3>(root.v_index) = vel.root_linear;
    v.segment<3>(root.v_index + 3) = vel.root_angular;
  }
  for (size_t k = 0; k < model.spherical().size(); ++k)
    v.segment<3>(model.links[model.spherical()[k]].v_index) = vel.angular.at(k);
  for (size_t k = 0; k < model.revolute().size(); ++k) v[model.links[model.revolute()[k]].v_index] = vel.rates.at(k);
  return v;
}

KinematicPose pose_from_coordinates(const HumanoidModel& model, const Eigen::VectorXd& q) {
  KinematicPose p;
  const Link& root = model.links[0];
  if (root.joint.type == JointType::Free) {
    p.root_position = q.segment<3>(root.q_index);
    p.root_orientation = canonical(read_quat(q, root.q_index + 3));
  }
  for (int li : model.spherical()) p.rotations.push_back(canonical(read_quat(q, model.links[li].q_index)));
  for (int li : model.revolute()) p.angles.push_back(q[model.links[li].q_index]);
  return p;
}

KinematicVelocity velocity_from_coordinates(const HumanoidModel& model, const Eigen::VectorXd& v) {
  KinematicVelocity out;
  const Link& root = model.links[0];
  if (root.joint.type == JointType::Free) {
    out.root_linear = v.segment<3>(root.v_index);
    out.root_angular = v.segment<3>(root.v_index + 3);
  }
  for (int li : model.spherical()) out.angular.push_back(v.segment<3>(model.links[li].v_index));
  for (int li : model.revolute()) out.rates.push_back(v[model.links[li].v_index]);
  return out;
}

Eigen::VectorXd joint_channels(const HumanoidModel& model, const KinematicPose& pose) {
  Eigen::VectorXd ch(model.num_channels());
  int s = 0, r = 0;
  for (int li : model.controlled()) {
    const Link& l = model.links[li];
    if (l.joint.type == JointType::Spherical)
      ch.segment<3>(l.channel_index) = euler_xyz(pose.rotations.at(s++));
    else
      ch[l.channel_index] = pose.angles.at(r++);
  }
  return ch;
}

void apply_joint_channels(const HumanoidModel& model, const Eigen::VectorXd& channels, KinematicPose& pose) {
  pose.rotations.resize(model.spherical().size());
  pose.angles.resize(model.revolute().size());
  int s = 0, r = 0;
  for (int li : model.controlled()) {
    const Link& l = model.links[li];
    if (l.joint.type == JointType::Spherical)
      pose.rotations[s++] = from_euler_xyz(channels.segment<3>(l.channel_index));
    else
      pose.angles[r++] = channels[l.channel_index];
  }
}

KinematicTrajectory initialize_kinematics(const PoseSequence& seq, const HumanoidModel& model) {
  const FrameInit init(seq, model);
  KinematicTrajectory traj;
  traj.fps = seq.fps();
  traj.neutral_ankles = init.any_neutral_ankle();
  traj.poses.reserve(seq.num_frames());
  for (int t = 0; t < seq.num_frames(); ++t) traj.poses.push_back(init(t));
  return finite_difference_velocities(std::move(traj), seq.fps());
}

KinematicTrajectory finite_difference_velocities(KinematicTrajectory traj, double fps) {
  const int T = traj.num_frames();
  traj.velocities.assign(T, KinematicVelocity{});
  if (T < 2) {
    if (T == 1) {
      traj.velocities[0].angular.assign(traj.poses[0].rotations.size(), Vec3::Zero());
      traj.velocities[0].rates.assign(traj.poses[0].angles.size(), 0.0);
    }
    return traj;
  }
  auto diff = [fps](const Quat& a, const Quat& b) -> Vec3 { return rotation_vector(a.conjugate() * b) * fps; };
  for (int t = 0; t + 1 < T; ++t) {
    const KinematicPose& p0 = traj.poses[t];
    const KinematicPose& p1 = traj.poses[t + 1];
    KinematicVelocity& v = traj.velocities[t];
    v.root_linear = (p1.root_position - p0.root_position) * fps;
    v.root_angular = diff(p0.root_orientation, p1.root_orientation);
    v.angular.resize(p0.rotations.size());
    for (size_t k = 0; k < p0.rotations.size(); ++k) v.angular[k] = diff(p0.rotations[k], p1.rotations[k]);
    v.rates.resize(p0.angles.size());
    for (size_t k = 0; k < p0.angles.size(); ++k) v.rates[k] = (p1.angles[k] - p0.angles[k]) * fps;
  }
  traj.velocities[T - 1] = traj.velocities[T - 2];
  return traj;
}

}  // namespace plausim
