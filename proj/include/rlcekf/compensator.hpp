#pragma once

#include <cstdint>
#include <vector>

#include "rlcekf/ekf.hpp"
#include "rlcekf/imu_sim.hpp"
#include "rlcekf/mlp.hpp"
#include "rlcekf/types.hpp"

namespace rlcekf {

/// Frame in which the RL innovation is expressed before the gain is applied.
enum class InnovationFrame : std::int32_t {
  /// Each 3-block rotated into the navigation frame with the EKF estimate,
  /// matching the navigation-frame (left) injection of the correction.
  kNavigation = 0,
  /// Raw body-frame residual y - h(q).
  kBody = 1,
};

struct PolicyShape {
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double u_max = 1.0;
  double gamma = 0.5;
  InnovationFrame frame = InnovationFrame::kNavigation;
};

/// Residual-gain policy U = pi(previous correction), U in R^{3x6}, plus the
/// critic and target critic it was trained with.
struct CompensatorPolicy {
  static constexpr int kStateSize = 3;
  static constexpr int kActionSize = 18;

  Mlp actor;
  Mlp critic;
  Mlp target_critic;
  double u_max = 1.0;
  double gamma = 0.5;
  InnovationFrame frame = InnovationFrame::kNavigation;

  /// Random hidden layers; actor output weights ~ N(0, actor_final_std^2) so
  /// the initial gain is close to zero.
  static CompensatorPolicy create(const PolicyShape& shape, std::uint64_t seed,
                                  float actor_final_std = 1e-2f);
  /// All-zero actor: compensation is the identity.
  static CompensatorPolicy zero(const PolicyShape& shape = {});

  /// Row-major reshape of the actor output.
  Mat36 gain(const Vec3& previous_correction) const;
  double value(const Vec3& state) const;

  /// Throws ConfigError on wrong dimensions or non-finite weights.
  void validate() const;
  bool operator==(const CompensatorPolicy&) const = default;
};

/// y - h(q) at the EKF-corrected, normalized estimate.
Vec6 rl_innovation(const UnitQuaternion& corrected, const MeasurementFrame& frame,
                   const ReferenceVectors& refs);

/// Applies the frame convention to an RL innovation.
Vec6 resolve_innovation(const Vec6& innovation, const UnitQuaternion& estimate,
                        InnovationFrame frame);

struct CompensationResult {
  FilterState state;
  Vec3 correction = Vec3::Zero();
  Mat36 gain = Mat36::Zero();
};

/// Injects correction = U * eps (after frame resolution) with
/// q <- exp_map(correction) ⊗ q and P <- M P M^T, M = left_matrix(exp_map(correction)).
/// A zero correction returns the state bit-for-bit unchanged.
CompensationResult compensate_with_gain(const FilterState& state, const Vec6& innovation,
                                        const Mat36& gain, InnovationFrame frame);
CompensationResult compensate(const FilterState& state, const Vec6& innovation,
                              const CompensatorPolicy& policy, const Vec3& previous_correction);

/// Squared attitude error |log(truth ⊗ estimate*)|^2 (rad^2).
double episode_cost(const UnitQuaternion& truth, const UnitQuaternion& estimate);

/// EKF followed by the learned compensation. A null policy gives vanilla
/// EKF behaviour. Frame 0 only sets the initial estimate.
class RlcEkf {
 public:
  struct StepInfo {
    FilterState ekf_state;  // after EKF correction and normalization
    Vec6 innovation = Vec6::Zero();
    Vec6 resolved_innovation = Vec6::Zero();
    Mat36 gain = Mat36::Zero();
    Vec3 state_in = Vec3::Zero();    // previous correction fed to the policy
    Vec3 correction = Vec3::Zero();  // injected this step
  };

  RlcEkf(const EkfParams& params, const CompensatorPolicy* policy, const UnitQuaternion& initial);

  /// `gain_noise`, when given, is added to the policy gain and the sum is
  /// clipped to [-u_max, u_max] (exploration during data collection).
  const StepInfo& step(const MeasurementFrame& prev, const MeasurementFrame& cur, double period,
                       const Mat36* gain_noise = nullptr);

  const FilterState& state() const { return state_; }
  UnitQuaternion attitude() const { return state_.attitude(); }
  const StepInfo& last_step() const { return info_; }
  const Vec3& previous_correction() const { return previous_correction_; }

 private:
  EkfParams params_;
  const CompensatorPolicy* policy_;
  FilterState state_;
  Vec3 previous_correction_ = Vec3::Zero();
  StepInfo info_;
};

}  // namespace rlcekf
