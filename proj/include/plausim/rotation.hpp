#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace plausim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Rotation angles below this use the first-order small-angle expansion.
inline constexpr double kSmallAngle = 1e-8;

/// Flips the sign so that w >= 0 and normalizes.
Quat canonical(const Quat& q);

/// Quaternion logarithm of a unit quaternion: (theta/2) * axis.
Vec3 quat_log(const Quat& q);

/// Inverse of quat_log.
Quat quat_exp(const Vec3& half_rotation);

/// Rotation vector (theta * axis) of a unit quaternion, theta in [0, pi].
inline Vec3 rotation_vector(const Quat& q) { return 2.0 * quat_log(q); }

/// Unit quaternion for a rotation vector.
inline Quat from_rotation_vector(const Vec3& rv) { return quat_exp(0.5 * rv); }

/// Intrinsic X-Y-Z Euler angles, R = Rx(a) * Ry(b) * Rz(c), b in [-pi/2, pi/2].
Vec3 euler_xyz(const Quat& q);
Quat from_euler_xyz(const Vec3& angles);

/// Maps the local angular velocity into intrinsic-XYZ Euler angle rates and back.
Vec3 euler_rates_from_angular_velocity(const Vec3& angles, const Vec3& omega_local);
Vec3 angular_velocity_from_euler_rates(const Vec3& angles, const Vec3& rates);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Shortest rotation taking unit vector `from` onto unit vector `to`.
Quat swing_between(const Vec3& from, const Vec3& to);

/// Right-handed orthonormal basis from three points: x along (c - b),
/// y along cross(a - b, x), z = cross(x, y). Columns are [x y z].
/// Throws DegenerateGeometry when the points are collinear.
Mat3 basis_from_joints(const Vec3& a, const Vec3& b, const Vec3& c);

/// Quaternion q such that rotating basis A by q (in A's frame) yields B,
/// i.e. B = A * R(q). Canonical sign. Throws InvalidArgument if either basis
/// deviates from orthonormal by more than 1e-6.
Quat rotation_between_bases(const Mat3& A, const Mat3& B);

}  // namespace plausim
