#include "rlcekf/compensator.hpp"

#include <algorithm>
#include <cmath>

#include "rlcekf/errors.hpp"

namespace rlcekf {

namespace {

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

}  // namespace

CompensatorPolicy CompensatorPolicy::create(const PolicyShape& shape, std::uint64_t seed,
                                            float actor_final_std) {
  if (!(shape.u_max > 0.0)) throw ConfigError("u_max must be positive");
  if (!(shape.gamma >= 0.0 && shape.gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  CompensatorPolicy p;
  p.u_max = shape.u_max;
  p.gamma = shape.gamma;
  p.frame = shape.frame;
  p.actor = Mlp(layer_sizes(kStateSize, shape.actor_hidden, kActionSize), Mlp::Output::kScaledTanh,
                static_cast<float>(shape.u_max));
  p.critic = Mlp(layer_sizes(kStateSize, shape.critic_hidden, 1), Mlp::Output::kLinear);
  Rng rng(seed);
  p.actor.initialize(rng, actor_final_std);
  p.critic.initialize(rng, 0.1f);
  p.target_critic = p.critic;
  return p;
}

CompensatorPolicy CompensatorPolicy::zero(const PolicyShape& shape) {
  CompensatorPolicy p = create(shape, 0, 0.0f);
  for (auto& l : p.actor.layers()) {
    l.W.setZero();
    l.b.setZero();
  }
  return p;
}

Mat36 CompensatorPolicy::gain(const Vec3& previous_correction) const {
  const Eigen::VectorXf out = actor.forward(previous_correction.cast<float>().eval());
  Mat36 u;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 6; ++c) u(r, c) = static_cast<double>(out[r * 6 + c]);
  }
  return u;
}

double CompensatorPolicy::value(const Vec3& state) const {
  return static_cast<double>(critic.forward(state.cast<float>().eval())[0]);
}

void CompensatorPolicy::validate() const {
  if (actor.sizes().empty() || actor.input_size() != kStateSize ||
      actor.output_size() != kActionSize) {
    throw ConfigError("actor must map R^3 to R^18");
  }
  if (critic.sizes().empty() || critic.input_size() != kStateSize || critic.output_size() != 1) {
    throw ConfigError("critic must map R^3 to R");
  }
  if (target_critic.sizes() != critic.sizes()) {
    throw ConfigError("target critic shape differs from critic");
  }
  if (actor.output_kind() != Mlp::Output::kScaledTanh ||
      std::abs(static_cast<double>(actor.output_scale()) - u_max) > 1e-6 * u_max) {
    throw ConfigError("actor output must be squashed by u_max");
  }
  if (!(u_max > 0.0) || !std::isfinite(u_max)) throw ConfigError("u_max must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!actor.all_finite() || !critic.all_finite() || !target_critic.all_finite()) {
    throw ConfigError("policy weights must be finite");
  }
}

Vec6 rl_innovation(const UnitQuaternion& corrected, const MeasurementFrame& frame,
                   const ReferenceVectors& refs) {
  return frame.observation() - measurement_model(corrected, refs);
}

Vec6 resolve_innovation(const Vec6& innovation, const UnitQuaternion& estimate,
                        InnovationFrame frame) {
  if (frame == InnovationFrame::kBody) return innovation;
  const Mat3 r = to_rotation_matrix(estimate);
  Vec6 out;
  out << r * innovation.head<3>(), r * innovation.tail<3>();
  return out;
}

CompensationResult compensate_with_gain(const FilterState& state, const Vec6& innovation,
                                        const Mat36& gain, InnovationFrame frame) {
  CompensationResult r;
  r.gain = gain;
  r.correction = gain * resolve_innovation(innovation, state.attitude(), frame);
  if (r.correction.isZero(0.0)) {
    r.state = state;
    return r;
  }
  const UnitQuaternion dq = exp_map(r.correction);
  const Mat4 M = left_matrix(dq);
  r.state.q = (dq * state.attitude()).coeffs();
  r.state.P = M * state.P * M.transpose();
  symmetrize(r.state.P);
  return r;
}

CompensationResult compensate(const FilterState& state, const Vec6& innovation,
                              const CompensatorPolicy& policy, const Vec3& previous_correction) {
  return compensate_with_gain(state, innovation, policy.gain(previous_correction), policy.frame);
}

double episode_cost(const UnitQuaternion& truth, const UnitQuaternion& estimate) {
  return attitude_error(truth, estimate).squaredNorm();
}

RlcEkf::RlcEkf(const EkfParams& params, const CompensatorPolicy* policy,
               const UnitQuaternion& initial)
    : params_(params), policy_(policy) {
  params_.validate();
  if (policy_) policy_->validate();
  state_.q = initial.coeffs();
  state_.P = params_.initial_cov;
}

const RlcEkf::StepInfo& RlcEkf::step(const MeasurementFrame& prev, const MeasurementFrame& cur,
                                     double period, const Mat36* gain_noise) {
  const EkfStepResult ekf = ekf_step(state_, prev.gyro, cur.observation(), period, params_);
  info_ = StepInfo{};
  info_.ekf_state = ekf.state;
  info_.state_in = previous_correction_;
  if (!policy_) {
    state_ = ekf.state;
    return info_;
  }
  const UnitQuaternion corrected = ekf.state.attitude();
  info_.innovation = rl_innovation(corrected, cur, params_.refs);
  info_.resolved_innovation = resolve_innovation(info_.innovation, corrected, policy_->frame);

  Mat36 gain = policy_->gain(previous_correction_);
  if (gain_noise) {
    gain = (gain + *gain_noise).cwiseMax(-policy_->u_max).cwiseMin(policy_->u_max);
  }
  const CompensationResult c = compensate_with_gain(ekf.state, info_.innovation, gain, policy_->frame);
  info_.gain = c.gain;
  info_.correction = c.correction;
  state_ = c.state;
  previous_correction_ = c.correction;
  return info_;
}

}  // namespace rlcekf
