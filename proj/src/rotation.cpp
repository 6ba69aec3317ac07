#include "rlcekf/rotation.hpp"

#include <cmath>
#include <numbers>

#include "rlcekf/errors.hpp"

namespace rlcekf {

namespace {

constexpr double kTaylorThreshold = 1e-8;
// Below this angle the derivative of sin(theta/2)/theta is taken from its
// series; the closed form cancels catastrophically.
constexpr double kSeriesThreshold = 1e-3;
constexpr double kLogTaylorW = 1.0 - 1e-10;
constexpr double kGimbalTolerance = 1e-7;

}  // namespace

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z)
    : UnitQuaternion(Vec4(w, x, y, z)) {}

UnitQuaternion::UnitQuaternion(const Vec4& coeffs) {
  const double n = coeffs.norm();
  if (!std::isfinite(n) || n == 0.0) {
    throw ConfigError("quaternion components must be finite and nonzero");
  }
  c_ = coeffs / n;
}

UnitQuaternion UnitQuaternion::from_unit_coeffs(const Vec4& coeffs) {
  const double n = coeffs.norm();
  if (std::isfinite(n) && std::abs(n - 1.0) <= 1e-9) {
    return UnitQuaternion(coeffs, Unchecked{});
  }
  return UnitQuaternion(coeffs);
}

UnitQuaternion UnitQuaternion::conjugate() const {
  return UnitQuaternion(Vec4(c_[0], -c_[1], -c_[2], -c_[3]), Unchecked{});
}

UnitQuaternion UnitQuaternion::canonical() const {
  bool flip = c_[0] < 0.0;
  if (c_[0] == 0.0) {
    for (int i = 1; i < 4; ++i) {
      if (c_[i] != 0.0) {
        flip = c_[i] < 0.0;
        break;
      }
    }
  }
  return flip ? UnitQuaternion(Vec4(-c_), Unchecked{}) : *this;
}

Vec4 hamilton(const Vec4& a, const Vec4& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

UnitQuaternion multiply(const UnitQuaternion& a, const UnitQuaternion& b) {
  const Vec4 p = hamilton(a.coeffs(), b.coeffs());
  return UnitQuaternion(Vec4(p / p.norm()), UnitQuaternion::Unchecked{});
}

UnitQuaternion exp_map(const RotationVector& v) {
  const double theta = v.norm();
  Vec4 c;
  if (theta < kTaylorThreshold) {
    const double t2 = theta * theta;
    c[0] = 1.0 - t2 / 8.0;
    c.tail<3>() = 0.5 * v * (1.0 - t2 / 24.0);
  } else {
    const double half = 0.5 * theta;
    c[0] = std::cos(half);
    c.tail<3>() = (std::sin(half) / theta) * v;
  }
  return UnitQuaternion(c, UnitQuaternion::Unchecked{});
}

RotationVector log_map(const UnitQuaternion& q) {
  const UnitQuaternion c = q.canonical();
  const Vec3 u = c.vec();
  const double s = u.norm();
  const double w = c.w();
  double factor;
  if (w > kLogTaylorW) {
    factor = (2.0 / w) * (1.0 - s * s / (3.0 * w * w));
  } else {
    factor = 2.0 * std::atan2(s, w) / s;
  }
  return factor * u;
}

Mat43 exp_jacobian(const RotationVector& e) {
  const double theta = e.norm();
  const Mat3 eet = e * e.transpose();
  Mat43 j;
  if (theta < kTaylorThreshold) {
    j.row(0) = -0.25 * e.transpose();
    j.bottomRows<3>() = 0.5 * (1.0 - theta * theta / 24.0) * Mat3::Identity() - eet / 24.0;
    return j;
  }
  const double half = 0.5 * theta;
  const double s = std::sin(half) / theta;
  double ds_over_theta;
  if (theta < kSeriesThreshold) {
    ds_over_theta = -1.0 / 24.0 + theta * theta / 960.0;
  } else {
    ds_over_theta = (half * std::cos(half) - std::sin(half)) / (theta * theta * theta);
  }
  j.row(0) = -0.5 * s * e.transpose();
  j.bottomRows<3>() = s * Mat3::Identity() + ds_over_theta * eet;
  return j;
}

RotationMatrix to_rotation_matrix(const UnitQuaternion& q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  RotationMatrix r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

Vec3 rotate(const UnitQuaternion& q, const Vec3& v) { return to_rotation_matrix(q) * v; }

Mat4 left_matrix(const Vec4& p) {
  const double w = p[0], x = p[1], y = p[2], z = p[3];
  Mat4 m;
  m << w, -x, -y, -z,
       x, w, -z, y,
       y, z, w, -x,
       z, -y, x, w;
  return m;
}

Mat4 right_matrix(const Vec4& p) {
  const double w = p[0], x = p[1], y = p[2], z = p[3];
  Mat4 m;
  m << w, -x, -y, -z,
       x, w, z, -y,
       y, -z, w, x,
       z, y, -x, w;
  return m;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

EulerAngles to_euler(const UnitQuaternion& q) {
  const RotationMatrix r = to_rotation_matrix(q);
  EulerAngles e;
  e.pitch = std::atan2(-r(2, 0), std::hypot(r(2, 1), r(2, 2)));
  if (std::numbers::pi / 2.0 - std::abs(e.pitch) < kGimbalTolerance) {
    e.yaw = std::atan2(-r(0, 1), r(1, 1));
    e.roll = 0.0;
  } else {
    e.yaw = std::atan2(r(1, 0), r(0, 0));
    e.roll = std::atan2(r(2, 1), r(2, 2));
  }
  return e;
}

UnitQuaternion from_euler(const EulerAngles& e) {
  const UnitQuaternion qz(std::cos(e.yaw / 2), 0.0, 0.0, std::sin(e.yaw / 2));
  const UnitQuaternion qy(std::cos(e.pitch / 2), 0.0, std::sin(e.pitch / 2), 0.0);
  const UnitQuaternion qx(std::cos(e.roll / 2), std::sin(e.roll / 2), 0.0, 0.0);
  return qz * qy * qx;
}

RotationVector attitude_error(const UnitQuaternion& truth, const UnitQuaternion& estimate) {
  return log_map(truth * estimate.conjugate());
}

double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, kTwoPi);
  if (r <= -std::numbers::pi) r += kTwoPi;
  return r;
}

}  // namespace rlcekf
