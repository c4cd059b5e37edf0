#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "plausim/humanoid_model.hpp"
#include "plausim/kinematics.hpp"
#include "plausim/pose_core.hpp"

namespace plausim {

enum class TorqueLaw { StablePD, PD };

struct SimParams {
  double dt = 0.001;
  double gravity = 9.81;
  double contact_stiffness = 3.0e4;  // N/m
  double contact_damping = 1.0e3;    // N*s/m
  double friction = 0.9;
  /// Viscous coefficient of sticking friction, N*s/m.
  double tangential_damping = 1.0e4;
  /// A collision point counts as touching the ground below this height, m.
  double contact_height = 0.0005;
  /// Any generalized speed above this is treated as divergence.
  double max_speed = 1.0e3;
  TorqueLaw torque_law = TorqueLaw::StablePD;
};

struct ContactPoint {
  int link = -1;
  Vec3 position = Vec3::Zero();
  double normal_force = 0.0;
  Vec2 lateral_force = Vec2::Zero();

  Vec3 force() const { return {lateral_force.x(), lateral_force.y(), normal_force}; }
};

struct SimState {
  Eigen::VectorXd q;
  Eigen::VectorXd v;
  double time = 0.0;
  std::vector<ContactPoint> contacts;
  /// Summed contact force on each foot link during the last step, indexed by FootSide.
  std::array<Vec3, 2> foot_force{Vec3::Zero(), Vec3::Zero()};
  /// Generalized acceleration of the last step.
  Eigen::VectorXd acceleration;
};

/// State recorded at a target-frame boundary.
struct Snapshot {
  double time = 0.0;
  Eigen::VectorXd q;
  Eigen::VectorXd v;
  Eigen::VectorXd acceleration;
  Vec3 com = Vec3::Zero();
  Vec3 com_velocity = Vec3::Zero();
  /// Foot forces averaged over the physics steps of the preceding frame.
  std::array<Vec3, 2> foot_force{Vec3::Zero(), Vec3::Zero()};
  std::vector<ContactPoint> contacts;
  /// Collision points within the contact height of the plane.
  std::vector<std::pair<int, Vec3>> ground_points;
};

struct Rollout {
  std::vector<Snapshot> snapshots;
  bool diverged = false;
  /// Index of the first frame that could not be simulated.
  int diverged_frame = -1;
  std::string diverged_quantity;
  SimState final_state;
};

/// Single-threaded simulation instance. The model is shared read-only.
class Simulator {
 public:
  explicit Simulator(const HumanoidModel& model, SimParams params = {});

  const HumanoidModel& model() const { return *model_; }
  const SimParams& params() const { return params_; }

  SimState make_state(const Eigen::VectorXd& q, const Eigen::VectorXd& v, double time = 0.0) const;
  SimState make_state(const KinematicPose& pose, const KinematicVelocity& vel, double time = 0.0) const;

  /// Generalized joint torques (root entries zero), clamped to the joint limits.
  /// With a plane, the next-step prediction includes ground contact.
  Eigen::VectorXd stable_pd_torques(const SimState& state, const Eigen::VectorXd& q_target,
                                    const Eigen::VectorXd& v_target, const GroundPlane* plane = nullptr);
  Eigen::VectorXd pd_torques(const SimState& state, const Eigen::VectorXd& q_target, const Eigen::VectorXd& v_target,
                             TorqueLaw law, const GroundPlane* plane = nullptr);

  /// Advances one fixed step. Throws SimulationDiverged on a non-finite or runaway state.
  SimState step(const SimState& state, const Eigen::VectorXd& torques, const GroundPlane& plane);

  /// One step under the configured torque law towards the given target.
  /// Equivalent to step(state, pd_torques(state, ..., &plane), plane).
  SimState track(const SimState& state, const Eigen::VectorXd& q_target, const Eigen::VectorXd& v_target,
                 const GroundPlane& plane);

  /// Tracks targets[begin + 1 .. begin + count - 1], holding each for one frame
  /// of physics steps. Snapshot 0 is the initial state.
  Rollout rollout(const SimState& initial, const KinematicTrajectory& targets, int begin, int count,
                  const GroundPlane& plane);

  Eigen::MatrixXd mass_matrix(const SimState& state);
  /// Coriolis, centrifugal and gravity forces.
  Eigen::VectorXd bias_forces(const SimState& state);

  Vec3 com(const SimState& state) const;
  Vec3 com_velocity(const SimState& state) const;

  Snapshot snapshot(const SimState& state, const std::array<Vec3, 2>& foot_force, const GroundPlane& plane) const;

 private:
  using Spatial = Eigen::Matrix<double, 6, 1>;
  using Mat6 = Eigen::Matrix<double, 6, 6>;

  struct Dynamics {
    Eigen::VectorXd acceleration;
    std::vector<ContactPoint> contacts;
  };

  void prepare(const SimState& state);
  /// Forward dynamics under generalized forces plus implicit joint damping and contact.
  Dynamics solve_dynamics(const SimState& state, const Eigen::VectorXd& generalized,
                          const Eigen::VectorXd& implicit_damping, const GroundPlane& plane);
  SimState integrate(const SimState& state, Dynamics&& dyn) const;
  Eigen::VectorXd pd_feedback(const SimState& state, const Eigen::VectorXd& q_target, const Eigen::VectorXd& v_target,
                              double lookahead) const;
  Eigen::Matrix<double, 3, Eigen::Dynamic> point_jacobian(int link, const Vec3& p) const;
  void check_finite(const SimState& s) const;

  const HumanoidModel* model_;
  SimParams params_;
  std::vector<std::vector<int>> ancestors_;  // per link, self first

  // Quantities of the prepared state.
  Eigen::VectorXd cached_q_, cached_v_;
  bool cache_valid_ = false;
  LinkFrames frames_;
  Eigen::Matrix<double, 6, Eigen::Dynamic> S_;  // world-frame motion subspace, per DOF
  std::vector<Spatial> velocity_;
  std::vector<Mat6> inertia_;
  Eigen::MatrixXd M_;
  Eigen::VectorXd C_;
  Eigen::VectorXd kp_, kd_, limit_;
};

Vec3 compute_com(const HumanoidModel& model, const Eigen::VectorXd& q);
Vec3 compute_com(const Simulator& sim, const SimState& state);
Vec3 compute_com_velocity(const Simulator& sim, const SimState& state);

/// Per frame, per foot magnitude of the summed contact force. Rows are frames, columns FootSide.
Eigen::MatrixX2d contact_force_series(const std::vector<Snapshot>& snapshots);

}  // namespace plausim
