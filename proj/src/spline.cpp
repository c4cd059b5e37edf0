#include "plausim/spline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/QR>

#include "plausim/errors.hpp"
#include "plausim/log.hpp"

namespace plausim {

CubicBSpline::CubicBSpline(double start, double end, int intervals, Eigen::MatrixXd control_points)
    : start_(start), end_(end), intervals_(intervals) {
  if (!(end > start)) throw InvalidArgument("spline span must be positive");
  if (intervals < 1) throw InvalidArgument("spline needs at least one knot interval");
  set_control_points(std::move(control_points));
}

void CubicBSpline::set_control_points(Eigen::MatrixXd control_points) {
  if (control_points.rows() != intervals_ + 3)
    throw InvalidArgument("spline with " + std::to_string(intervals_) + " intervals needs " +
                          std::to_string(intervals_ + 3) + " control points, got " +
                          std::to_string(control_points.rows()));
  control_ = std::move(control_points);
}

Eigen::VectorXd CubicBSpline::knots() const {
  const int n = intervals_;
  Eigen::VectorXd u(n + 7);
  const double h = (end_ - start_) / n;
  for (int i = 0; i < 4; ++i) {
    u[i] = start_;
    u[n + 3 + i] = end_;
  }
  for (int i = 1; i < n; ++i) u[3 + i] = start_ + i * h;
  return u;
}

Eigen::VectorXd CubicBSpline::parameters() const {
  Eigen::VectorXd x(control_.size());
  for (int r = 0; r < control_.rows(); ++r) x.segment(r * control_.cols(), control_.cols()) = control_.row(r);
  return x;
}

void CubicBSpline::set_parameters(const Eigen::VectorXd& x) {
  if (x.size() != control_.size()) throw InvalidArgument("spline parameter vector has the wrong size");
  for (int r = 0; r < control_.rows(); ++r) control_.row(r) = x.segment(r * control_.cols(), control_.cols());
}

Eigen::RowVectorXd CubicBSpline::basis(double t) const {
  constexpr int p = 3;
  const int n = intervals_;
  const Eigen::VectorXd u = knots();
  t = std::clamp(t, start_, end_);
  const double h = (end_ - start_) / n;
  const int k = std::clamp(static_cast<int>(std::floor((t - start_) / h)), 0, n - 1) + p;  // span index
  // Cox-de Boor, nonzero functions only.
  double N[p + 1], left[p + 1], right[p + 1];
  N[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - u[k + 1 - j];
    right[j] = u[k + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom > 0.0 ? N[r] / denom : 0.0;
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(n + p);
  for (int j = 0; j <= p; ++j) b[k - p + j] = N[j];
  return b;
}

Eigen::VectorXd CubicBSpline::evaluate(double t) const { return (basis(t) * control_).transpose(); }

CubicBSpline CubicBSpline::fit(const Eigen::VectorXd& times, const Eigen::MatrixXd& values, double start, double end,
                               int intervals) {
  if (times.size() != values.rows()) throw InvalidArgument("spline fit: times and values differ in length");
  CubicBSpline s(start, end, intervals, Eigen::MatrixXd::Zero(intervals + 3, values.cols()));
  Eigen::MatrixXd B(times.size(), intervals + 3);
  for (int i = 0; i < times.size(); ++i) B.row(i) = s.basis(times[i]);
  // Minimum-norm solution keeps under-determined fits well defined.
  s.set_control_points(B.completeOrthogonalDecomposition().solve(values));
  return s;
}

Eigen::MatrixXd unwrapped_channels(const KinematicTrajectory& traj, const HumanoidModel& model, int begin, int count) {
  Eigen::MatrixXd Y(count, model.num_channels());
  for (int i = 0; i < count; ++i) Y.row(i) = joint_channels(model, traj.poses[begin + i]).transpose();
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int i = 1; i < count; ++i)
    for (int c = 0; c < Y.cols(); ++c) Y(i, c) -= kTwoPi * std::round((Y(i, c) - Y(i - 1, c)) / kTwoPi);
  return Y;
}

int spline_intervals(int count, double fps, double knot_spacing) {
  if (!(knot_spacing > 0.0)) throw InvalidArgument("knot spacing must be positive");
  const double span = std::max(1, count - 1) / fps;
  return std::max(1, static_cast<int>(std::lround(span / knot_spacing)));
}

SplineFit fit_spline_to_reference(const KinematicTrajectory& traj, const HumanoidModel& model, int begin, int count,
                                  double knot_spacing) {
  if (count < 2 || begin < 0 || begin + count > traj.num_frames())
    throw InvalidArgument("spline window [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                          ") is not inside the trajectory of " + std::to_string(traj.num_frames()) + " frames");
  SplineFit out;
  const Eigen::MatrixXd Y = unwrapped_channels(traj, model, begin, count);
  constexpr double kGimbal = 85.0 * std::numbers::pi / 180.0;
  for (int li : model.spherical()) {
    const int c = model.links[li].channel_index + 1;
    for (int i = 0; i < count; ++i) {
      if (std::abs(Y(i, c)) > kGimbal && !out.gimbal_warning) {
        out.gimbal_warning = true;
        log_warning("joint '" + model.links[li].joint.name + "' is within 5 degrees of gimbal lock at frame " +
                    std::to_string(begin + i) + "; Euler fit may be inaccurate");
      }
    }
  }
  Eigen::VectorXd times(count);
  for (int i = 0; i < count; ++i) times[i] = i / traj.fps;
  const double end = (count - 1) / traj.fps;
  out.spline = CubicBSpline::fit(times, Y, 0.0, end, spline_intervals(count, traj.fps, knot_spacing));
  return out;
}

KinematicTrajectory spline_targets(const CubicBSpline& spline, const KinematicTrajectory& reference,
                                   const HumanoidModel& model, int begin, int count) {
  KinematicTrajectory out;
  out.fps = reference.fps;
  out.neutral_ankles = reference.neutral_ankles;
  out.poses.reserve(count);
  for (int i = 0; i < count; ++i) {
    KinematicPose pose = reference.poses[begin + i];
    apply_joint_channels(model, spline.evaluate(i / reference.fps), pose);
    out.poses.push_back(std::move(pose));
  }
  return finite_difference_velocities(std::move(out), reference.fps);
}

}  // namespace plausim
