#pragma once

#include <Eigen/Core>

#include "plausim/humanoid_model.hpp"
#include "plausim/kinematics.hpp"

namespace plausim {

/// Clamped uniform cubic B-spline over [start, end] with vector-valued control points.
class CubicBSpline {
 public:
  CubicBSpline() = default;
  /// `intervals` uniform knot spans; control_points has intervals + 3 rows.
  CubicBSpline(double start, double end, int intervals, Eigen::MatrixXd control_points);

  double start() const { return start_; }
  double end() const { return end_; }
  int intervals() const { return intervals_; }
  int num_control_points() const { return static_cast<int>(control_.rows()); }
  int num_channels() const { return static_cast<int>(control_.cols()); }
  /// Full clamped knot vector, including the repeated end knots.
  Eigen::VectorXd knots() const;

  const Eigen::MatrixXd& control_points() const { return control_; }
  void set_control_points(Eigen::MatrixXd control_points);

  /// Flattened control points, control-point major.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& x);

  /// Basis weights of every control point at time t (clamped to the span).
  Eigen::RowVectorXd basis(double t) const;
  Eigen::VectorXd evaluate(double t) const;

  /// Least-squares fit to samples (rows of `values`) at `times`.
  static CubicBSpline fit(const Eigen::VectorXd& times, const Eigen::MatrixXd& values, double start, double end,
                          int intervals);

 private:
  double start_ = 0.0;
  double end_ = 1.0;
  int intervals_ = 1;
  Eigen::MatrixXd control_;
};

/// Joint channels of frames [begin, begin + count), Euler angles unwrapped per channel.
Eigen::MatrixXd unwrapped_channels(const KinematicTrajectory& traj, const HumanoidModel& model, int begin, int count);

struct SplineFit {
  CubicBSpline spline;
  bool gimbal_warning = false;
};

/// Fits the controllable joint channels of a window. Time is window-relative,
/// frame i at i / fps. Warns when a pitch angle comes within 5 degrees of gimbal lock.
SplineFit fit_spline_to_reference(const KinematicTrajectory& traj, const HumanoidModel& model, int begin, int count,
                                  double knot_spacing = 0.08);

/// Number of knot intervals used for a window of `count` frames.
int spline_intervals(int count, double fps, double knot_spacing);

/// Target trajectory of a window: reference poses with joint channels replaced by the
/// spline, velocities by finite differences of the resulting poses.
KinematicTrajectory spline_targets(const CubicBSpline& spline, const KinematicTrajectory& reference,
                                   const HumanoidModel& model, int begin, int count);

}  // namespace plausim
