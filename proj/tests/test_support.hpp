#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>

#include "rlcekf/rotation.hpp"
#include "rlcekf/types.hpp"

namespace rlcekf::test {

inline constexpr double kPi = 3.14159265358979323846;

inline Vec3 random_vec3(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

/// Uniform unit quaternion (Shoemake's subgroup algorithm).
inline UnitQuaternion random_quat(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double u1 = u(rng), u2 = u(rng), u3 = u(rng);
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  return UnitQuaternion(a * std::sin(2 * kPi * u2), a * std::cos(2 * kPi * u2),
                        b * std::sin(2 * kPi * u3), b * std::cos(2 * kPi * u3));
}

/// Rotation vector with |v| uniform in [0, max_angle] and a uniform axis.
inline Vec3 random_rotvec(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, max_angle);
  Vec3 axis(n(rng), n(rng), n(rng));
  return axis.normalized() * u(rng);
}

/// Rodrigues' formula, independent of the quaternion code.
inline Mat3 rodrigues(const Vec3& v) {
  const double th = v.norm();
  if (th == 0.0) return Mat3::Identity();
  const Vec3 k = v / th;
  Mat3 K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return Mat3::Identity() + std::sin(th) * K + (1 - std::cos(th)) * K * K;
}

/// Central finite-difference Jacobian of f: R^n -> R^m.
inline Eigen::MatrixXd numeric_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd p = x, m = x;
    p[i] += h;
    m[i] -= h;
    J.col(i) = (f(p) - f(m)) / (2 * h);
  }
  return J;
}

/// Random symmetric PSD 4x4 matrix.
inline Mat4 random_psd4(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat4 A;
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = n(rng);
  return A * A.transpose();
}

inline double min_eigenvalue(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  return es.eigenvalues().minCoeff();
}

}  // namespace rlcekf::test
