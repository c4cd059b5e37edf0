#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "plausim/cmaes.hpp"
#include "plausim/humanoid_model.hpp"
#include "plausim/humanoid_sim.hpp"
#include "plausim/kinematics.hpp"
#include "plausim/pose_core.hpp"
#include "plausim/spline.hpp"

namespace plausim {

struct CostWeights {
  double com = 20.0;
  double com_velocity = 0.5;
  double orientation = 1.0;
  double pose = 1.0;
  double velocity = 5e-3;
  double acceleration = 1e-10;
  double feet = 1.5;
  /// One weight per controllable joint, in model order. Empty means all ones.
  std::vector<double> joint;

  /// Ones, except zero for the ankles when they carry no observation.
  static CostWeights for_model(const HumanoidModel& model, bool neutral_ankles);
  void validate(const HumanoidModel& model) const;
  /// Expands the joint weights to one weight per Euler channel.
  Eigen::VectorXd channel_weights(const HumanoidModel& model) const;
};

struct WindowPlan {
  double window_length = 0.5;  // s
  double overlap = 0.5;        // fraction of the window shared with the next
  int iterations = 200;
  int population = 100;
  double sigma0 = 0.05;       // rad
  double knot_spacing = 0.08; // s
  double divergence_penalty = 1e6;
  int threads = 1;

  void validate(double fps) const;
};

struct Window {
  int begin = 0;
  int count = 0;
};

/// Windows of round(length * fps) frames (at least 2) advancing by the non-overlapping
/// part; the last window is truncated at T and every frame is covered.
std::vector<Window> plan_windows(int num_frames, double fps, const WindowPlan& plan);

/// Per-frame quantities compared by the tracking cost.
struct FrameSeries {
  std::vector<Vec3> com;
  std::vector<Vec3> com_velocity;
  std::vector<Quat> root_orientation;
  std::vector<Eigen::VectorXd> channels;      // unwrapped Euler joint channels
  std::vector<Eigen::VectorXd> acceleration;  // controllable DOFs; empty for references
  std::vector<std::array<bool, 2>> feet;      // contact per FootSide

  int num_frames() const { return static_cast<int>(com.size()); }
  FrameSeries slice(int begin, int count) const;
};

struct CostTerms {
  double com = 0.0;
  double com_velocity = 0.0;
  double orientation = 0.0;
  double pose = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
  double feet = 0.0;

  double total(const CostWeights& w) const;
};

/// Unweighted loss terms between a simulated and a reference series of equal length.
/// Channel velocities are forward differences at `fps`. Throws InvalidArgument on length mismatch.
CostTerms trajectory_cost(const FrameSeries& sim, const FrameSeries& ref, const Eigen::VectorXd& channel_weights,
                          double fps);

/// Reference series of a kinematic trajectory: CoM of the posed model, its finite
/// difference, root orientation, joint channels and observed foot contacts.
FrameSeries reference_series(const KinematicTrajectory& traj, const HumanoidModel& model,
                             const std::vector<std::array<bool, 2>>& feet);
std::vector<std::array<bool, 2>> foot_contact_flags(const ContactStates& contacts);

/// Series of simulated snapshots. A foot is in contact when any of its collision points is.
FrameSeries simulated_series(const std::vector<Snapshot>& snapshots, const HumanoidModel& model);

/// State at reference frame `frame`, lifted so no collision point starts below the plane.
SimState initial_state(const Simulator& sim, const KinematicTrajectory& traj, const GroundPlane& plane,
                       int frame = 0);

struct WindowContext {
  const HumanoidModel* model = nullptr;
  const KinematicTrajectory* reference = nullptr;  // full sequence
  FrameSeries target_series;                       // window slice
  Window window;
  SimState initial;
  GroundPlane plane;
  CostWeights weights;
  Eigen::VectorXd channel_weights;
  CubicBSpline spline;  // layout of the decision vector
  double divergence_penalty = 1e6;
};

struct WindowEvaluation {
  double cost = 0.0;
  CostTerms terms;
  Rollout rollout;
  KinematicTrajectory targets;  // window-local
};

/// Rollout of the spline targets encoded by x and its weighted cost. Diverged rollouts
/// cost the penalty scaled by 1 + (unsimulated frames / window frames) plus the prefix cost.
WindowEvaluation evaluate_window(const Eigen::VectorXd& x, const WindowContext& ctx, Simulator& sim);
double window_cost(const Eigen::VectorXd& x, const WindowContext& ctx, Simulator& sim);

struct WindowTrace {
  Window window;
  std::vector<CmaesGeneration> history;
  double initial_cost = 0.0;
  double best_cost = 0.0;
  CostTerms terms;
  bool diverged = false;
  int evaluations = 0;
};

struct OptimizationResult {
  KinematicTrajectory targets;      // optimized targets, all frames
  std::vector<Snapshot> simulated;  // one per frame; shorter when the simulation diverged
  std::vector<WindowTrace> windows;
  bool diverged = false;
  int diverged_frame = -1;
};

OptimizationResult optimize_sequence(const KinematicTrajectory& reference, const std::vector<std::array<bool, 2>>& feet,
                                     const HumanoidModel& model, const GroundPlane& plane, const WindowPlan& plan,
                                     const CostWeights& weights, std::uint64_t seed, const SimParams& params = {});

/// Tracks the reference targets directly over the whole sequence, without optimization.
OptimizationResult simulate_reference(const KinematicTrajectory& reference, const HumanoidModel& model,
                                      const GroundPlane& plane, const SimParams& params = {});

}  // namespace plausim
