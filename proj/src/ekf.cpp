#include "rlcekf/ekf.hpp"

#include <cmath>

#include "rlcekf/errors.hpp"

namespace rlcekf {

namespace {

constexpr double kMaxInnovationCondition = 1e12;
constexpr double kMinQuaternionNorm = 1e-6;

// R(q)^T v for raw components: (w^2 - u.u) v + 2 (u.v) u - 2 w (u x v).
Vec3 rotate_to_body(const Vec4& q, const Vec3& v) {
  const double w = q[0];
  const Vec3 u = q.tail<3>();
  return (w * w - u.dot(u)) * v + 2.0 * u.dot(v) * u - 2.0 * w * u.cross(v);
}

Eigen::Matrix<double, 3, 4> rotate_to_body_jacobian(const Vec4& q, const Vec3& v) {
  const double w = q[0];
  const Vec3 u = q.tail<3>();
  Eigen::Matrix<double, 3, 4> j;
  j.col(0) = 2.0 * w * v - 2.0 * u.cross(v);
  j.rightCols<3>() = -2.0 * v * u.transpose() + 2.0 * u.dot(v) * Mat3::Identity() +
                     2.0 * u * v.transpose() + 2.0 * w * skew(v);
  return j;
}

}  // namespace

EkfParams EkfParams::from_noise(const NoiseModel& noise, const ReferenceVectors& refs) {
  EkfParams p;
  p.gyro_cov = noise.gyro_cov;
  p.acc_cov = noise.acc_cov;
  p.mag_cov = noise.mag_cov;
  p.refs = refs;
  return p;
}

Mat6 EkfParams::measurement_cov() const {
  Mat6 r = Mat6::Zero();
  r.topLeftCorner<3, 3>() = acc_scale * acc_cov;
  r.bottomRightCorner<3, 3>() = mag_scale * mag_cov;
  return r;
}

void EkfParams::validate() const {
  NoiseModel n;
  n.gyro_cov = gyro_cov;
  n.acc_cov = acc_cov;
  n.mag_cov = mag_cov;
  n.validate();
  if (!(gyro_scale > 0.0 && acc_scale > 0.0 && mag_scale > 0.0)) {
    throw ConfigError("EKF covariance multipliers must be positive");
  }
  if (std::abs(refs.gravity.norm() - 1.0) > 1e-9 || std::abs(refs.magnetic.norm() - 1.0) > 1e-9) {
    throw ConfigError("reference vectors must be unit length");
  }
}

void symmetrize(Mat4& P) { P = 0.5 * (P + P.transpose()).eval(); }

Mat4 transition_jacobian(const Vec3& gyro, double period) {
  return right_matrix(exp_map(period * gyro));
}

Mat43 noise_jacobian(const Vec4& q, double period) {
  return -period * left_matrix(q) * exp_jacobian(Vec3::Zero());
}

FilterState predict(const FilterState& state, const Vec3& gyro, double period,
                    const EkfParams& params) {
  const UnitQuaternion dq = exp_map(period * gyro);
  const Mat4 F = right_matrix(dq);
  const Mat43 G = noise_jacobian(state.q, period);
  FilterState out;
  out.q = (state.attitude() * dq).coeffs();
  out.P = F * state.P * F.transpose() + G * (params.gyro_scale * params.gyro_cov) * G.transpose();
  symmetrize(out.P);
  return out;
}

Vec6 measurement_model(const Vec4& q, const ReferenceVectors& refs) {
  Vec6 h;
  h << -rotate_to_body(q, refs.gravity), rotate_to_body(q, refs.magnetic);
  return h;
}

Mat64 measurement_jacobian(const Vec4& q, const ReferenceVectors& refs) {
  Mat64 H;
  H.topRows<3>() = -rotate_to_body_jacobian(q, refs.gravity);
  H.bottomRows<3>() = rotate_to_body_jacobian(q, refs.magnetic);
  return H;
}

FilterState correct(const FilterState& predicted, const Vec6& y, const EkfParams& params,
                    Innovation* innovation) {
  const Mat64 H = measurement_jacobian(predicted.q, params.refs);
  Innovation inn;
  inn.residual = y - measurement_model(predicted.q, params.refs);
  inn.S = H * predicted.P * H.transpose() + params.measurement_cov();
  inn.S = 0.5 * (inn.S + inn.S.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Mat6> es(inn.S, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || !(hi / lo <= kMaxInnovationCondition)) {
    throw SingularInnovation("innovation covariance is numerically singular");
  }
  // K = P H^T S^-1, computed as (S^-1 H P)^T.
  inn.K = inn.S.ldlt().solve(H * predicted.P).transpose();

  FilterState out;
  out.q = predicted.q + inn.K * inn.residual;
  out.P = predicted.P - inn.K * inn.S * inn.K.transpose();
  symmetrize(out.P);
  if (innovation) *innovation = inn;
  return out;
}

FilterState normalize_with_jacobian(const FilterState& state, NormalizationJacobian jacobian) {
  const double n = state.q.norm();
  if (!std::isfinite(n) || n <= kMinQuaternionNorm) {
    throw FilterDivergence("quaternion norm collapsed during normalization");
  }
  Mat4 J;
  if (jacobian == NormalizationJacobian::kRankOne) {
    J = state.q * state.q.transpose() / (n * n * n);
  } else {
    const Vec4 qn = state.q / n;
    J = (Mat4::Identity() - qn * qn.transpose()) / n;
  }
  FilterState out;
  out.q = state.q / n;
  out.P = J * state.P * J.transpose();
  symmetrize(out.P);
  return out;
}

EkfStepResult ekf_step(const FilterState& state, const Vec3& gyro_prev, const Vec6& y,
                       double period, const EkfParams& params) {
  EkfStepResult r;
  const FilterState predicted = predict(state, gyro_prev, period, params);
  try {
    r.state = normalize_with_jacobian(correct(predicted, y, params, &r.innovation),
                                      params.jacobian);
  } catch (const SingularInnovation&) {
    r.state = predicted;
    r.corrected = false;
  }
  return r;
}

AttitudeEkf::AttitudeEkf(const EkfParams& params, const UnitQuaternion& initial)
    : params_(params) {
  params_.validate();
  state_.q = initial.coeffs();
  state_.P = params_.initial_cov;
}

const FilterState& AttitudeEkf::step(const MeasurementFrame& prev, const MeasurementFrame& cur,
                                     double period) {
  auto r = ekf_step(state_, prev.gyro, cur.observation(), period, params_);
  state_ = r.state;
  innovation_ = r.innovation;
  return state_;
}

}  // namespace rlcekf
