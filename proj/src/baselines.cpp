#include "rlcekf/baselines.hpp"

#include "rlcekf/ekf.hpp"
#include "rlcekf/errors.hpp"

namespace rlcekf {

namespace {

Vec3 normalized_or_zero(const Vec3& v) {
  const double n = v.norm();
  return n > 0.0 ? Vec3(v / n) : Vec3::Zero();
}

}  // namespace

CfState cf_step(const CfState& state, const MeasurementFrame& frame, double period,
                const ReferenceVectors& refs) {
  if (!(state.beta >= 0.0)) throw ConfigError("CF gain must be non-negative");
  const Vec4& q = state.q.coeffs();

  Vec6 y;
  y << normalized_or_zero(frame.acc), normalized_or_zero(frame.mag);
  const Vec6 f = measurement_model(q, refs) - y;
  const Vec4 grad = measurement_jacobian(q, refs).transpose() * f;

  Vec4 omega(0.0, frame.gyro.x(), frame.gyro.y(), frame.gyro.z());
  Vec4 qdot = 0.5 * hamilton(q, omega);
  const double gn = grad.norm();
  if (gn > 0.0 && state.beta > 0.0) qdot -= state.beta * grad / gn;

  CfState out = state;
  out.q = UnitQuaternion(Vec4(q + period * qdot));
  return out;
}

UnitQuaternion gyro_integrate_step(const UnitQuaternion& q, const Vec3& gyro, double period) {
  return q * exp_map(period * gyro);
}

}  // namespace rlcekf
