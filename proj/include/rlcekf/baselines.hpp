#pragma once

#include "rlcekf/imu_sim.hpp"
#include "rlcekf/rotation.hpp"

namespace rlcekf {

/// Gradient-descent complementary filter (MARG form, no gyro-bias term).
struct CfState {
  UnitQuaternion q;
  double beta = kDefaultBeta;

  static constexpr double kDefaultBeta = 0.041;
};

/// q_dot = 1/2 q ⊗ y_w - beta grad/|grad|, grad = H^T (h(q) - y_normalized);
/// q <- normalize(q + T q_dot). The corrective term is dropped when the
/// gradient vanishes.
CfState cf_step(const CfState& state, const MeasurementFrame& frame, double period,
                const ReferenceVectors& refs);

/// q ⊗ exp_map(T y_w).
UnitQuaternion gyro_integrate_step(const UnitQuaternion& q, const Vec3& gyro, double period);

}  // namespace rlcekf
