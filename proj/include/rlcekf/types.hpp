#pragma once

#include <Eigen/Dense>

namespace rlcekf {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat43 = Eigen::Matrix<double, 4, 3>;
using Mat64 = Eigen::Matrix<double, 6, 4>;
using Mat46 = Eigen::Matrix<double, 4, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

/// Axis-angle vector (radians), direction = axis, norm = angle.
using RotationVector = Vec3;
/// Direction cosine matrix; columns are body axes expressed in the navigation frame.
using RotationMatrix = Mat3;

}  // namespace rlcekf
