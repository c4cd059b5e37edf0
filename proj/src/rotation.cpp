#include "plausim/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "plausim/errors.hpp"

namespace plausim {

Quat canonical(const Quat& q) {
  Quat r = q.normalized();
  if (r.w() < 0.0) r.coeffs() = -r.coeffs();
  return r;
}

Vec3 quat_log(const Quat& q_in) {
  const Quat q = canonical(q_in);
  const Vec3 v = q.vec();
  const double s = v.norm();
  const double half = std::atan2(s, q.w());
  if (2.0 * half < kSmallAngle) {
    return v;  // sin(x) ~ x
  }
  return v * (half / s);
}

Quat quat_exp(const Vec3& half_rotation) {
  const double half = half_rotation.norm();
  if (2.0 * half < kSmallAngle) {
    Quat q(1.0, half_rotation.x(), half_rotation.y(), half_rotation.z());
    return q.normalized();
  }
  const Vec3 v = half_rotation * (std::sin(half) / half);
  return Quat(std::cos(half), v.x(), v.y(), v.z());
}

Vec3 euler_xyz(const Quat& q) {
  const Mat3 R = q.normalized().toRotationMatrix();
  const double sb = std::clamp(R(0, 2), -1.0, 1.0);
  const double b = std::asin(sb);
  double a, c;
  if (std::abs(sb) < 1.0 - 1e-12) {
    a = std::atan2(-R(1, 2), R(2, 2));
    c = std::atan2(-R(0, 1), R(0, 0));
  } else {
    // gimbal lock: fold everything into a
    c = 0.0;
    a = std::atan2(R(2, 1), R(1, 1));
  }
  return {a, b, c};
}

Quat from_euler_xyz(const Vec3& e) {
  const Quat q = Eigen::AngleAxisd(e.x(), Vec3::UnitX()) * Eigen::AngleAxisd(e.y(), Vec3::UnitY()) *
                 Eigen::AngleAxisd(e.z(), Vec3::UnitZ());
  return canonical(q);
}

// omega_local = Rz^T Ry^T [da,0,0] + Rz^T [0,db,0] + [0,0,dc]
static Mat3 euler_rate_matrix(const Vec3& e) {
  const double sb = std::sin(e.y()), cb = std::cos(e.y());
  const double sc = std::sin(e.z()), cc = std::cos(e.z());
  Mat3 E;
  E << cb * cc, sc, 0.0,
      -cb * sc, cc, 0.0,
       sb,      0.0, 1.0;
  return E;
}

Vec3 angular_velocity_from_euler_rates(const Vec3& angles, const Vec3& rates) {
  return euler_rate_matrix(angles) * rates;
}

Vec3 euler_rates_from_angular_velocity(const Vec3& angles, const Vec3& omega_local) {
  const double cb = std::cos(angles.y());
  if (std::abs(cb) < 1e-9) return Vec3::Zero();
  return euler_rate_matrix(angles).inverse() * omega_local;
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::remainder(a, 2.0 * pi);
  if (a <= -pi) a += 2.0 * pi;
  return a;
}

Quat swing_between(const Vec3& from, const Vec3& to) {
  return canonical(Quat::FromTwoVectors(from, to));
}

Mat3 basis_from_joints(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 cb = c - b;
  const Vec3 ab = a - b;
  const double n = cb.norm();
  if (n < 1e-12) throw DegenerateGeometry("basis_from_joints: coincident points b and c");
  const Vec3 x = cb / n;
  const Vec3 yraw = ab.cross(x);
  if (yraw.norm() < 1e-8) throw DegenerateGeometry("basis_from_joints: collinear points");
  const Vec3 y = yraw.normalized();
  const Vec3 z = x.cross(y);
  Mat3 B;
  B.col(0) = x;
  B.col(1) = y;
  B.col(2) = z;
  return B;
}

static void require_orthonormal(const Mat3& M, const char* name) {
  const double dev = (M.transpose() * M - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (dev > 1e-6 || M.determinant() < 0.0)
    throw InvalidArgument(std::string("rotation_between_bases: basis ") + name +
                          " is not a right-handed orthonormal basis");
}

Quat rotation_between_bases(const Mat3& A, const Mat3& B) {
  require_orthonormal(A, "A");
  require_orthonormal(B, "B");
  return canonical(Quat(Mat3(A.transpose() * B)));
}

}  // namespace plausim
