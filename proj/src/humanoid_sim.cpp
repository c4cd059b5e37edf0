#include "plausim/humanoid_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "plausim/errors.hpp"

namespace plausim {

namespace {

using Spatial = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Spatial vectors are [angular; linear] about the world origin.
Spatial cross_motion(const Spatial& V, const Spatial& m) {
  Spatial out;
  const Vec3 w = V.head<3>(), v = V.tail<3>();
  out.head<3>() = w.cross(m.head<3>());
  out.tail<3>() = v.cross(m.head<3>()) + w.cross(m.tail<3>());
  return out;
}

Spatial cross_force(const Spatial& V, const Spatial& f) {
  Spatial out;
  const Vec3 w = V.head<3>(), v = V.tail<3>();
  out.head<3>() = w.cross(f.head<3>()) + v.cross(f.tail<3>());
  out.tail<3>() = w.cross(f.tail<3>());
  return out;
}

Mat6 spatial_inertia(double m, const Vec3& c, const Mat3& Ic) {
  const Mat3 C = skew(c);
  Mat6 I;
  I.topLeftCorner<3, 3>() = Ic + m * C * C.transpose();
  I.topRightCorner<3, 3>() = m * C;
  I.bottomLeftCorner<3, 3>() = m * C.transpose();
  I.bottomRightCorner<3, 3>() = m * Mat3::Identity();
  return I;
}

Quat read_quat(const Eigen::VectorXd& q, int i) { return Quat(q[i], q[i + 1], q[i + 2], q[i + 3]); }

void write_quat(Eigen::VectorXd& q, int i, const Quat& r) {
  q[i] = r.w();
  q[i + 1] = r.x();
  q[i + 2] = r.y();
  q[i + 3] = r.z();
}

enum class ContactMode { Stick, Slide, Off };

struct ActiveContact {
  int link;
  Vec3 position;
  double depth;
  Eigen::Matrix<double, 3, Eigen::Dynamic> J;
  ContactMode mode = ContactMode::Stick;
  Vec2 slide_dir = Vec2::Zero();
  Vec3 force = Vec3::Zero();
};

}  // namespace

Simulator::Simulator(const HumanoidModel& model, SimParams params) : model_(&model), params_(params) {
  if (!(params_.dt > 0.0)) throw InvalidArgument("time step must be positive");
  const int L = model.num_links();
  ancestors_.resize(L);
  for (int i = 0; i < L; ++i)
    for (int a = i; a >= 0; a = model.links[a].parent) ancestors_[i].push_back(a);
  const int nv = model.nv();
  kp_ = Eigen::VectorXd::Zero(nv);
  kd_ = Eigen::VectorXd::Zero(nv);
  limit_ = Eigen::VectorXd::Constant(nv, std::numeric_limits<double>::infinity());
  for (int li : model.controlled()) {
    const Link& l = model.links[li];
    for (int k = 0; k < l.nv(); ++k) {
      kp_[l.v_index + k] = l.joint.kp;
      kd_[l.v_index + k] = l.joint.kd;
      limit_[l.v_index + k] = l.joint.torque_limit;
    }
  }
  S_.resize(6, nv);
  velocity_.resize(L);
  inertia_.resize(L);
}

SimState Simulator::make_state(const Eigen::VectorXd& q, const Eigen::VectorXd& v, double time) const {
  if (q.size() != model_->nq() || v.size() != model_->nv())
    throw InvalidArgument("state dimensions do not match the model (nq=" + std::to_string(model_->nq()) +
                          ", nv=" + std::to_string(model_->nv()) + ")");
  SimState s;
  s.q = q;
  s.v = v;
  s.time = time;
  s.acceleration = Eigen::VectorXd::Zero(model_->nv());
  for (const Link& l : model_->links) {
    if (l.joint.type == JointType::Free) write_quat(s.q, l.q_index + 3, read_quat(q, l.q_index + 3).normalized());
    if (l.joint.type == JointType::Spherical) write_quat(s.q, l.q_index, read_quat(q, l.q_index).normalized());
  }
  return s;
}

SimState Simulator::make_state(const KinematicPose& pose, const KinematicVelocity& vel, double time) const {
  return make_state(to_coordinates(*model_, pose), to_velocities(*model_, vel), time);
}

void Simulator::prepare(const SimState& state) {
  if (state.q.size() != model_->nq() || state.v.size() != model_->nv())
    throw InvalidArgument("state dimensions do not match the model");
  if (cache_valid_ && state.q == cached_q_ && state.v == cached_v_) return;
  const HumanoidModel& m = *model_;
  frames_ = m.forward_kinematics(state.q);
  S_.setZero();
  for (int i = 0; i < m.num_links(); ++i) {
    const Link& l = m.links[i];
    const Mat3& R = frames_.rotation[i];
    const Vec3& o = frames_.origin[i];
    auto rotational = [&](int col, const Vec3& axis) {
      S_.col(col).head<3>() = axis;
      S_.col(col).tail<3>() = o.cross(axis);
    };
    switch (l.joint.type) {
      case JointType::Free:
        for (int k = 0; k < 3; ++k) {
          S_(3 + k, l.v_index + k) = 1.0;
          rotational(l.v_index + 3 + k, R.col(k));
        }
        break;
      case JointType::Spherical:
        for (int k = 0; k < 3; ++k) rotational(l.v_index + k, R.col(k));
        break;
      case JointType::Revolute: rotational(l.v_index, R * l.joint.axis); break;
      case JointType::Fixed: break;
    }
    Spatial V = l.parent >= 0 ? velocity_[l.parent] : Spatial::Zero();
    if (l.nv() > 0) V += S_.middleCols(l.v_index, l.nv()) * state.v.segment(l.v_index, l.nv());
    velocity_[i] = V;
    inertia_[i] = spatial_inertia(l.mass, frames_.point(i, l.com), R * l.inertia * R.transpose());
  }

  // Composite rigid body algorithm; world-frame quantities need no transforms.
  const int nv = m.nv();
  M_.setZero(nv, nv);
  std::vector<Mat6> composite(inertia_);
  for (int i = m.num_links() - 1; i >= 0; --i)
    if (m.links[i].parent >= 0) composite[m.links[i].parent] += composite[i];
  for (int i = 0; i < m.num_links(); ++i) {
    const Link& l = m.links[i];
    if (l.nv() == 0) continue;
    const Eigen::Matrix<double, 6, Eigen::Dynamic> F = composite[i] * S_.middleCols(l.v_index, l.nv());
    for (int a : ancestors_[i]) {
      const Link& la = m.links[a];
      if (la.nv() == 0) continue;
      const Eigen::MatrixXd block = S_.middleCols(la.v_index, la.nv()).transpose() * F;
      M_.block(la.v_index, l.v_index, la.nv(), l.nv()) = block;
      M_.block(l.v_index, la.v_index, l.nv(), la.nv()) = block.transpose();
    }
  }

  // Recursive Newton-Euler with zero joint acceleration and gravity as a base acceleration.
  std::vector<Spatial> force(m.num_links());
  Spatial a0 = Spatial::Zero();
  a0[5] = params_.gravity;
  std::vector<Spatial> accel(m.num_links());
  for (int i = 0; i < m.num_links(); ++i) {
    const Link& l = m.links[i];
    Spatial A = l.parent >= 0 ? accel[l.parent] : a0;
    if (l.joint.type == JointType::Free) {
      // translational columns are constant in the world frame
      const Spatial sw = S_.middleCols(l.v_index + 3, 3) * state.v.segment<3>(l.v_index + 3);
      A += cross_motion(velocity_[i], sw);
    } else if (l.nv() > 0) {
      A += cross_motion(velocity_[i], S_.middleCols(l.v_index, l.nv()) * state.v.segment(l.v_index, l.nv()));
    }
    accel[i] = A;
    force[i] = inertia_[i] * A + cross_force(velocity_[i], inertia_[i] * velocity_[i]);
  }
  C_.setZero(nv);
  for (int i = m.num_links() - 1; i >= 0; --i) {
    const Link& l = m.links[i];
    if (l.nv() > 0) C_.segment(l.v_index, l.nv()) = S_.middleCols(l.v_index, l.nv()).transpose() * force[i];
    if (l.parent >= 0) force[l.parent] += force[i];
  }

  cached_q_ = state.q;
  cached_v_ = state.v;
  cache_valid_ = true;
}

Eigen::MatrixXd Simulator::mass_matrix(const SimState& state) {
  prepare(state);
  return M_;
}

Eigen::VectorXd Simulator::bias_forces(const SimState& state) {
  prepare(state);
  return C_;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> Simulator::point_jacobian(int link, const Vec3& p) const {
  Eigen::Matrix<double, 3, Eigen::Dynamic> J = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, model_->nv());
  for (int a : ancestors_[link]) {
    const Link& l = model_->links[a];
    for (int k = 0; k < l.nv(); ++k) {
      const auto s = S_.col(l.v_index + k);
      J.col(l.v_index + k) = s.tail<3>() + s.head<3>().cross(p);
    }
  }
  return J;
}

Eigen::VectorXd Simulator::stable_pd_torques(const SimState& state, const Eigen::VectorXd& q_target,
                                             const Eigen::VectorXd& v_target, const GroundPlane* plane) {
  return pd_torques(state, q_target, v_target, TorqueLaw::StablePD, plane);
}

Eigen::VectorXd Simulator::pd_feedback(const SimState& state, const Eigen::VectorXd& q_target,
                                       const Eigen::VectorXd& v_target, double lookahead) const {
  const HumanoidModel& m = *model_;
  if (q_target.size() != m.nq() || v_target.size() != m.nv())
    throw InvalidArgument("target dimensions do not match the model (nq=" + std::to_string(m.nq()) +
                          ", nv=" + std::to_string(m.nv()) + ")");
  if (state.q.size() != m.nq() || state.v.size() != m.nv())
    throw InvalidArgument("state dimensions do not match the model");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m.nv());
  for (int li : m.controlled()) {
    const Link& l = m.links[li];
    if (l.joint.type == JointType::Spherical) {
      const Quat q = read_quat(state.q, l.q_index).normalized();
      const Quat pred = q * quat_exp(0.5 * lookahead * state.v.segment<3>(l.v_index));
      const Quat target = read_quat(q_target, l.q_index).normalized();
      e.segment<3>(l.v_index) = rotation_vector(canonical(pred.conjugate() * target));
    } else {
      e[l.v_index] = q_target[l.q_index] - (state.q[l.q_index] + lookahead * state.v[l.v_index]);
    }
  }
  // Root gains are zero, so the root stays unactuated.
  return kp_.cwiseProduct(e) - kd_.cwiseProduct(state.v - v_target);
}

Eigen::VectorXd Simulator::pd_torques(const SimState& state, const Eigen::VectorXd& q_target,
                                      const Eigen::VectorXd& v_target, TorqueLaw law, const GroundPlane* plane) {
  Eigen::VectorXd tau;
  if (law == TorqueLaw::PD) {
    tau = pd_feedback(state, q_target, v_target, 0.0);
  } else {
    tau = pd_feedback(state, q_target, v_target, params_.dt);
    Eigen::VectorXd acc;
    if (plane) {
      acc = solve_dynamics(state, tau, kd_, *plane).acceleration;
    } else {
      prepare(state);
      Eigen::MatrixXd A = M_;
      A.diagonal() += params_.dt * kd_;
      acc = A.llt().solve(tau - C_);
    }
    tau -= params_.dt * kd_.cwiseProduct(acc);
  }
  return tau.cwiseMax(-limit_).cwiseMin(limit_);
}

void Simulator::check_finite(const SimState& s) const {
  if (!s.q.allFinite()) throw SimulationDiverged("non-finite generalized position", s.time);
  if (!s.v.allFinite()) throw SimulationDiverged("non-finite generalized velocity", s.time);
  if (s.v.cwiseAbs().maxCoeff() > params_.max_speed)
    throw SimulationDiverged("generalized velocity exceeds " + std::to_string(params_.max_speed), s.time);
}

Simulator::Dynamics Simulator::solve_dynamics(const SimState& state, const Eigen::VectorXd& generalized,
                                              const Eigen::VectorXd& implicit_damping, const GroundPlane& plane) {
  const HumanoidModel& m = *model_;
  prepare(state);
  const double dt = params_.dt;
  const double k = params_.contact_stiffness;
  const double cn = params_.contact_damping + k * dt;  // implicit spring adds damping
  const double ct = params_.tangential_damping;
  const double mu = params_.friction;

  std::vector<std::pair<int, Vec3>> points;
  m.collision_points(frames_, plane.normal, points);
  std::vector<ActiveContact> contacts;
  for (const auto& [li, p] : points) {
    const double depth = -plane.height_of(p);
    if (depth > 0.0) contacts.push_back({li, p, depth, point_jacobian(li, p)});
  }

  Eigen::MatrixXd M = M_;
  M.diagonal() += dt * implicit_damping;
  const Eigen::VectorXd base = generalized - C_;
  Dynamics out;

  // Linearly implicit penalty contact: f = b + G * J * v_next per point.
  auto point_model = [&](const ActiveContact& c, Mat3& G, Vec3& b) {
    if (c.mode == ContactMode::Stick) {
      G = Vec3(-ct, -ct, -cn).asDiagonal();
      b = Vec3(0, 0, k * c.depth);
    } else {
      const Vec3 dir(mu * c.slide_dir.x(), mu * c.slide_dir.y(), 1.0);
      G = -cn * dir * Vec3::UnitZ().transpose();
      b = dir * (k * c.depth);
    }
  };
  if (contacts.empty()) {
    out.acceleration = M.llt().solve(base);
    return out;
  }
  for (int iter = 0; iter < 8; ++iter) {
    Eigen::MatrixXd A = M;
    Eigen::VectorXd r = base;
    for (const ActiveContact& c : contacts) {
      if (c.mode == ContactMode::Off) continue;
      Mat3 G;
      Vec3 b;
      point_model(c, G, b);
      const Eigen::Matrix<double, 3, Eigen::Dynamic> GJ = G * c.J;
      A.noalias() -= dt * c.J.transpose() * GJ;
      r.noalias() += c.J.transpose() * (b + GJ * state.v);
    }
    const Eigen::VectorXd acc = A.partialPivLu().solve(r);
    const Eigen::VectorXd v_next = state.v + dt * acc;
    bool changed = false;
    for (ActiveContact& c : contacts) {
      if (c.mode == ContactMode::Off) {
        c.force.setZero();
        continue;
      }
      Mat3 G;
      Vec3 b;
      point_model(c, G, b);
      const Vec3 u = c.J * v_next;
      c.force = b + G * u;
      const Vec2 ft = c.force.head<2>();
      if (c.force.z() < 0.0) {
        c.mode = ContactMode::Off;
        changed = true;
      } else if (c.mode == ContactMode::Stick && ft.norm() > mu * c.force.z()) {
        c.mode = ContactMode::Slide;
        c.slide_dir = ft.normalized();
        changed = true;
      } else if (c.mode == ContactMode::Slide && u.head<2>().dot(c.slide_dir) > 0.0) {
        c.mode = ContactMode::Stick;
        changed = true;
      }
    }
    if (!changed) break;
  }
  // Apply exactly the forces reported, projected onto the friction cone.
  Eigen::VectorXd r = base;
  for (ActiveContact& c : contacts) {
    if (c.mode == ContactMode::Off) c.force.setZero();
    c.force.z() = std::max(0.0, c.force.z());
    const double lateral = c.force.head<2>().norm();
    const double cap = mu * c.force.z();
    if (lateral > cap) c.force.head<2>() *= cap / lateral;
    r.noalias() += c.J.transpose() * c.force;
    if (c.force.z() <= 0.0) continue;
    ContactPoint cp;
    cp.link = c.link;
    cp.position = c.position;
    cp.normal_force = c.force.z();
    cp.lateral_force = c.force.head<2>();
    out.contacts.push_back(cp);
  }
  out.acceleration = M.llt().solve(r);
  return out;
}

SimState Simulator::integrate(const SimState& state, Dynamics&& dyn) const {
  const HumanoidModel& m = *model_;
  const double dt = params_.dt;
  SimState next;
  next.time = state.time + dt;
  next.v = state.v + dt * dyn.acceleration;
  next.acceleration = std::move(dyn.acceleration);
  next.q = state.q;
  for (const Link& l : m.links) {
    switch (l.joint.type) {
      case JointType::Free: {
        next.q.segment<3>(l.q_index) += dt * next.v.segment<3>(l.v_index);
        const Quat r = read_quat(state.q, l.q_index + 3) * quat_exp(0.5 * dt * next.v.segment<3>(l.v_index + 3));
        write_quat(next.q, l.q_index + 3, r.normalized());
        break;
      }
      case JointType::Spherical: {
        const Quat r = read_quat(state.q, l.q_index) * quat_exp(0.5 * dt * next.v.segment<3>(l.v_index));
        write_quat(next.q, l.q_index, r.normalized());
        break;
      }
      case JointType::Revolute: next.q[l.q_index] += dt * next.v[l.v_index]; break;
      case JointType::Fixed: break;
    }
  }
  next.contacts = std::move(dyn.contacts);
  for (const ContactPoint& c : next.contacts)
    if (auto side = m.links[c.link].foot) next.foot_force[static_cast<int>(*side)] += c.force();
  check_finite(next);
  return next;
}

SimState Simulator::step(const SimState& state, const Eigen::VectorXd& torques, const GroundPlane& plane) {
  if (torques.size() != model_->nv()) throw InvalidArgument("torque vector does not match the model DOF count");
  return integrate(state, solve_dynamics(state, torques, Eigen::VectorXd::Zero(model_->nv()), plane));
}

SimState Simulator::track(const SimState& state, const Eigen::VectorXd& q_target, const Eigen::VectorXd& v_target,
                          const GroundPlane& plane) {
  if (params_.torque_law == TorqueLaw::PD)
    return step(state, pd_torques(state, q_target, v_target, TorqueLaw::PD, &plane), plane);
  const Eigen::VectorXd tau0 = pd_feedback(state, q_target, v_target, params_.dt);
  Dynamics dyn = solve_dynamics(state, tau0, kd_, plane);
  const Eigen::VectorXd tau = tau0 - params_.dt * kd_.cwiseProduct(dyn.acceleration);
  const Eigen::VectorXd clamped = tau.cwiseMax(-limit_).cwiseMin(limit_);
  // Unclamped, the implicit solve already is the step under these torques.
  if (clamped == tau) return integrate(state, std::move(dyn));
  return step(state, clamped, plane);
}

Vec3 Simulator::com(const SimState& state) const { return compute_com(*model_, state.q); }

Vec3 Simulator::com_velocity(const SimState& state) const {
  const HumanoidModel& m = *model_;
  const LinkFrames f = m.forward_kinematics(state.q);
  // Spatial velocities recomputed locally so the method stays const.
  std::vector<Spatial> V(m.num_links(), Spatial::Zero());
  Vec3 momentum = Vec3::Zero();
  for (int i = 0; i < m.num_links(); ++i) {
    const Link& l = m.links[i];
    const Mat3& R = f.rotation[i];
    const Vec3& o = f.origin[i];
    Spatial Vi = l.parent >= 0 ? V[l.parent] : Spatial::Zero();
    auto add_rot = [&](const Vec3& axis, double rate) {
      Vi.head<3>() += axis * rate;
      Vi.tail<3>() += o.cross(axis) * rate;
    };
    switch (l.joint.type) {
      case JointType::Free:
        Vi.tail<3>() += state.v.segment<3>(l.v_index);
        for (int k = 0; k < 3; ++k) add_rot(R.col(k), state.v[l.v_index + 3 + k]);
        break;
      case JointType::Spherical:
        for (int k = 0; k < 3; ++k) add_rot(R.col(k), state.v[l.v_index + k]);
        break;
      case JointType::Revolute: add_rot(R * l.joint.axis, state.v[l.v_index]); break;
      case JointType::Fixed: break;
    }
    V[i] = Vi;
    const Vec3 c = f.point(i, l.com);
    momentum += l.mass * (Vi.tail<3>() + Vi.head<3>().cross(c));
  }
  return momentum / m.total_mass();
}

Snapshot Simulator::snapshot(const SimState& state, const std::array<Vec3, 2>& foot_force,
                             const GroundPlane& plane) const {
  Snapshot s;
  s.time = state.time;
  s.q = state.q;
  s.v = state.v;
  s.acceleration = state.acceleration.size() == model_->nv() ? state.acceleration
                                                              : Eigen::VectorXd::Zero(model_->nv());
  s.com = com(state);
  s.com_velocity = com_velocity(state);
  s.foot_force = foot_force;
  s.contacts = state.contacts;
  std::vector<std::pair<int, Vec3>> points;
  model_->collision_points(model_->forward_kinematics(state.q), plane.normal, points);
  for (const auto& p : points)
    if (plane.height_of(p.second) < params_.contact_height) s.ground_points.push_back(p);
  return s;
}

Rollout Simulator::rollout(const SimState& initial, const KinematicTrajectory& targets, int begin, int count,
                           const GroundPlane& plane) {
  Rollout out;
  out.final_state = initial;
  if (count <= 0) return out;
  if (begin < 0 || begin + count > targets.num_frames())
    throw InvalidArgument("rollout window [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                          ") exceeds the target trajectory of " + std::to_string(targets.num_frames()) + " frames");
  const int steps = std::max(1, static_cast<int>(std::lround(1.0 / (targets.fps * params_.dt))));
  SimState s = initial;
  out.snapshots.push_back(snapshot(s, s.foot_force, plane));
  for (int i = 1; i < count; ++i) {
    const int frame = begin + i;
    const Eigen::VectorXd qt = to_coordinates(*model_, targets.poses[frame]);
    const Eigen::VectorXd vt = to_velocities(*model_, targets.velocities[frame]);
    std::array<Vec3, 2> force_sum{Vec3::Zero(), Vec3::Zero()};
    try {
      for (int n = 0; n < steps; ++n) {
        s = track(s, qt, vt, plane);
        force_sum[0] += s.foot_force[0];
        force_sum[1] += s.foot_force[1];
      }
    } catch (const SimulationDiverged& e) {
      out.diverged = true;
      out.diverged_frame = i;
      out.diverged_quantity = e.quantity();
      break;
    }
    for (auto& f : force_sum) f /= steps;
    out.snapshots.push_back(snapshot(s, force_sum, plane));
  }
  out.final_state = s;
  return out;
}

Vec3 compute_com(const HumanoidModel& model, const Eigen::VectorXd& q) {
  const LinkFrames f = model.forward_kinematics(q);
  Vec3 sum = Vec3::Zero();
  for (int i = 0; i < model.num_links(); ++i) sum += model.links[i].mass * f.point(i, model.links[i].com);
  return sum / model.total_mass();
}

Vec3 compute_com(const Simulator& sim, const SimState& state) { return sim.com(state); }

Vec3 compute_com_velocity(const Simulator& sim, const SimState& state) { return sim.com_velocity(state); }

Eigen::MatrixX2d contact_force_series(const std::vector<Snapshot>& snapshots) {
  Eigen::MatrixX2d out(snapshots.size(), 2);
  for (size_t t = 0; t < snapshots.size(); ++t)
    for (int side = 0; side < 2; ++side) out(t, side) = snapshots[t].foot_force[side].norm();
  return out;
}

}  // namespace plausim
