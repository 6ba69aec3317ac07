#pragma once

#include "rlcekf/types.hpp"

namespace rlcekf {

/// Scalar-first Hamilton unit quaternion.
///
/// Orientation convention: q^nb maps body-frame vectors into the navigation
/// frame, v_n = q ⊗ v_b ⊗ q*, with R^nb = to_rotation_matrix(q) and
/// R^bn = (R^nb)^T.
class UnitQuaternion {
 public:
  UnitQuaternion() : c_(1.0, 0.0, 0.0, 0.0) {}
  /// Normalizes the given components. Throws ConfigError on a zero or
  /// non-finite input.
  UnitQuaternion(double w, double x, double y, double z);
  explicit UnitQuaternion(const Vec4& coeffs);

  static UnitQuaternion identity() { return {}; }
  /// Accepts components that are already unit-norm within 1e-9 without
  /// renormalizing them (bit-preserving); otherwise normalizes.
  static UnitQuaternion from_unit_coeffs(const Vec4& coeffs);

  double w() const { return c_[0]; }
  double x() const { return c_[1]; }
  double y() const { return c_[2]; }
  double z() const { return c_[3]; }
  Vec3 vec() const { return c_.tail<3>(); }
  const Vec4& coeffs() const { return c_; }

  UnitQuaternion conjugate() const;
  /// Double-cover representative with w > 0, ties at w = 0 broken by the
  /// first nonzero vector component being positive.
  UnitQuaternion canonical() const;

  bool operator==(const UnitQuaternion&) const = default;

 private:
  struct Unchecked {};
  UnitQuaternion(const Vec4& coeffs, Unchecked) : c_(coeffs) {}
  friend UnitQuaternion multiply(const UnitQuaternion&, const UnitQuaternion&);
  friend UnitQuaternion exp_map(const RotationVector&);

  Vec4 c_;
};

/// Hamilton product of raw 4-vectors (no normalization).
Vec4 hamilton(const Vec4& a, const Vec4& b);

/// Hamilton product a ⊗ b, renormalized. Sign is not canonicalized.
UnitQuaternion multiply(const UnitQuaternion& a, const UnitQuaternion& b);
inline UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
  return multiply(a, b);
}

/// Half-angle exponential: w = cos(|v|/2), vec = sin(|v|/2) v/|v|.
UnitQuaternion exp_map(const RotationVector& v);

/// Inverse of exp_map on the canonical representative; |result| <= pi.
RotationVector log_map(const UnitQuaternion& q);

/// Jacobian d exp_map(e) / d e (4x3, scalar row first).
Mat43 exp_jacobian(const RotationVector& e);

RotationMatrix to_rotation_matrix(const UnitQuaternion& q);

/// Rotates v by the sandwich q ⊗ v ⊗ q*.
Vec3 rotate(const UnitQuaternion& q, const Vec3& v);

/// Left product matrix: left_matrix(p) * q == p ⊗ q.
Mat4 left_matrix(const Vec4& p);
/// Right product matrix: right_matrix(p) * q == q ⊗ p.
Mat4 right_matrix(const Vec4& p);
inline Mat4 left_matrix(const UnitQuaternion& p) { return left_matrix(p.coeffs()); }
inline Mat4 right_matrix(const UnitQuaternion& p) { return right_matrix(p.coeffs()); }

Mat3 skew(const Vec3& v);

/// Aerospace ZYX (yaw, pitch, roll) angles in radians.
struct EulerAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  Vec3 as_vector() const { return {yaw, pitch, roll}; }
};

/// ZYX intrinsic decomposition. Within 1e-7 of |pitch| = pi/2 the free
/// angle is assigned to yaw and roll is set to zero.
EulerAngles to_euler(const UnitQuaternion& q);
UnitQuaternion from_euler(const EulerAngles& e);

/// Rotation vector taking `estimate` onto `truth` in the navigation frame:
/// log_map(truth ⊗ estimate*).
RotationVector attitude_error(const UnitQuaternion& truth, const UnitQuaternion& estimate);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace rlcekf
