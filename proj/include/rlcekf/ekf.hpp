#pragma once

#include "rlcekf/imu_sim.hpp"
#include "rlcekf/rotation.hpp"
#include "rlcekf/types.hpp"

namespace rlcekf {

/// Quaternion components plus their 4x4 covariance.
///
/// `q` is unit-norm everywhere except between correct() and
/// normalize_with_jacobian(); the filter drivers never expose that window.
struct FilterState {
  Vec4 q = Vec4(1.0, 0.0, 0.0, 0.0);
  Mat4 P = 0.5 * Mat4::Identity();

  UnitQuaternion attitude() const { return UnitQuaternion::from_unit_coeffs(q); }
  bool operator==(const FilterState&) const = default;
};

/// Covariance Jacobian used when renormalizing the quaternion.
enum class NormalizationJacobian {
  /// J = q q^T / |q|^3 (rank one, along q).
  kRankOne,
  /// J = (I - q q^T / |q|^2) / |q| (tangent-space projector).
  kProjector,
};

struct EkfParams {
  Mat3 gyro_cov = 0.0003 * Mat3::Identity();
  Mat3 acc_cov = 0.0005 * Mat3::Identity();
  Mat3 mag_cov = 0.0003 * Mat3::Identity();
  ReferenceVectors refs;
  /// Multipliers on the gyroscope, accelerometer and magnetometer covariances.
  double gyro_scale = 1.0;
  double acc_scale = 1.0;
  double mag_scale = 1.0;
  NormalizationJacobian jacobian = NormalizationJacobian::kRankOne;
  Mat4 initial_cov = 0.5 * Mat4::Identity();

  static EkfParams from_noise(const NoiseModel& noise, const ReferenceVectors& refs);
  Mat6 measurement_cov() const;
  void validate() const;
};

struct Innovation {
  Vec6 residual = Vec6::Zero();
  Mat6 S = Mat6::Zero();
  Mat46 K = Mat46::Zero();
};

/// Propagates with the gyro sample of the previous frame:
/// q <- q ⊗ exp_map(T y_w), P <- F P F^T + G Q G^T.
FilterState predict(const FilterState& state, const Vec3& gyro, double period,
                    const EkfParams& params);

/// F = right_matrix(exp_map(T y_w)).
Mat4 transition_jacobian(const Vec3& gyro, double period);
/// G = d/de [q ⊗ exp_map(-T e)] at e = 0, i.e. -T left_matrix(q) exp_jacobian(0).
Mat43 noise_jacobian(const Vec4& q, double period);

/// h(q) = (-R^bn g^n ; R^bn m^n), with R(q) in its homogeneous quadratic
/// form so the map is defined for non-unit q.
Vec6 measurement_model(const Vec4& q, const ReferenceVectors& refs);
inline Vec6 measurement_model(const UnitQuaternion& q, const ReferenceVectors& refs) {
  return measurement_model(q.coeffs(), refs);
}
/// dh/dq (6x4).
Mat64 measurement_jacobian(const Vec4& q, const ReferenceVectors& refs);

/// Additive correction q <- q + K e; leaves q unnormalized. Throws
/// SingularInnovation when cond(S) > 1e12.
FilterState correct(const FilterState& predicted, const Vec6& y, const EkfParams& params,
                    Innovation* innovation = nullptr);

/// q <- q / |q|, P <- J P J^T. Throws FilterDivergence when |q| <= 1e-6.
FilterState normalize_with_jacobian(const FilterState& state,
                                    NormalizationJacobian jacobian = NormalizationJacobian::kRankOne);

void symmetrize(Mat4& P);

/// Prediction, correction and normalization for one frame. The correction
/// is skipped (and `corrected` cleared) when S is numerically singular.
struct EkfStepResult {
  FilterState state;
  Innovation innovation;
  bool corrected = true;
};
EkfStepResult ekf_step(const FilterState& state, const Vec3& gyro_prev, const Vec6& y,
                       double period, const EkfParams& params);

/// Stateful vanilla EKF. Frame 0 only sets the initial estimate; frame k >= 1
/// predicts with the gyro sample of frame k-1 and corrects with frame k.
class AttitudeEkf {
 public:
  AttitudeEkf(const EkfParams& params, const UnitQuaternion& initial);

  const FilterState& step(const MeasurementFrame& prev, const MeasurementFrame& cur,
                          double period);
  const FilterState& state() const { return state_; }
  const Innovation& last_innovation() const { return innovation_; }
  const EkfParams& params() const { return params_; }

 private:
  EkfParams params_;
  FilterState state_;
  Innovation innovation_;
};

}  // namespace rlcekf
