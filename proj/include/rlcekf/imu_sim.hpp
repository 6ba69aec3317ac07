#pragma once

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "rlcekf/rotation.hpp"
#include "rlcekf/types.hpp"

namespace rlcekf {

/// Unit reference directions in the navigation frame.
struct ReferenceVectors {
  Vec3 gravity = Vec3::UnitZ();
  Vec3 magnetic = magnetic_from_dip(kDefaultDipRad);

  static constexpr double kDefaultDipRad = 71.0 * 3.14159265358979323846 / 180.0;
  /// m^n = (cos dip, 0, -sin dip).
  static Vec3 magnetic_from_dip(double dip_rad);
};

/// Noise-free angular rate as a function of time.
class AngularVelocityProfile {
 public:
  struct Zero {};
  struct Constant {
    Vec3 rate = Vec3::Zero();
  };
  /// Per-axis rate_i(t) = amplitude_i * sin(2 pi frequency_i t + phase_i).
  struct Sinusoid {
    Vec3 amplitude = Vec3::Zero();
    Vec3 frequency_hz = Vec3::Zero();
    Vec3 phase = Vec3::Zero();
  };
  /// Rate of segment k applies for t in [start_k, start_{k+1}); the first
  /// segment also covers t < start_0.
  struct PiecewiseConstant {
    std::vector<double> start_times;
    std::vector<Vec3> rates;
  };
  using Kind = std::variant<Zero, Constant, Sinusoid, PiecewiseConstant>;

  AngularVelocityProfile() = default;
  /// Throws ConfigError when the profile can exceed max_rate.
  explicit AngularVelocityProfile(Kind kind, double max_rate = kDefaultMaxRate);

  Vec3 operator()(double t) const;
  const Kind& kind() const { return kind_; }
  double max_rate() const { return max_rate_; }

  static constexpr double kDefaultMaxRate = 10.0;

  /// Per-axis sinusoids, 1 rad/s at 0.3/0.4/0.5 Hz. Used for policy training.
  static AngularVelocityProfile training();
  /// A profile distinct from the training one, used by the benchmark scenarios.
  static AngularVelocityProfile evaluation();

 private:
  Kind kind_ = Zero{};
  double max_rate_ = kDefaultMaxRate;
};

/// Multiplies sensor covariances for t in [begin, end).
struct CovarianceScaleInterval {
  double begin = 0.0;
  double end = 0.0;
  double gyro = 1.0;
  double acc = 1.0;
  double mag = 1.0;
};

struct NoiseModel {
  Mat3 gyro_cov = Mat3::Zero();
  Mat3 acc_cov = Mat3::Zero();
  Mat3 mag_cov = Mat3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  std::vector<CovarianceScaleInterval> scale_schedule;

  /// Sigma_w = 3e-4 I, Sigma_a = 5e-4 I, Sigma_m = 3e-4 I.
  static NoiseModel paper_training();
  static NoiseModel noiseless() { return {}; }

  /// Throws ConfigError on non-symmetric/non-PSD covariances or
  /// non-positive multipliers.
  void validate() const;
};

struct MeasurementFrame {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();
  Vec3 acc = Vec3::Zero();
  Vec3 mag = Vec3::Zero();

  /// Stacked vector observation (acc; mag).
  Vec6 observation() const {
    Vec6 y;
    y << acc, mag;
    return y;
  }
  bool operator==(const MeasurementFrame&) const = default;
};

struct EpisodeRecord {
  double period = 0.01;
  std::vector<UnitQuaternion> truth;  // empty when no ground truth is available
  std::vector<MeasurementFrame> frames;
  NoiseModel noise;
  std::uint64_t seed = 0;

  bool has_truth() const { return !truth.empty(); }
  std::size_t size() const { return frames.size(); }
  /// Frames [begin, begin + count) as a standalone record; timestamps kept.
  EpisodeRecord slice(std::size_t begin, std::size_t count) const;
};

using Rng = std::mt19937_64;

/// q_0 = q0, q_k = q_{k-1} ⊗ exp_map(T * w(t_{k-1})). Returns n + 1 samples.
std::vector<UnitQuaternion> integrate_truth(const UnitQuaternion& q0,
                                            const AngularVelocityProfile& profile,
                                            double period, std::size_t steps);

/// Frame k at t = k T: gyro = w(t) + bias + e_w, acc = -R^bn g^n + e_a,
/// mag = R^bn m^n + e_m.
EpisodeRecord synthesize_measurements(const std::vector<UnitQuaternion>& truth,
                                      const AngularVelocityProfile& profile,
                                      const NoiseModel& noise,
                                      const ReferenceVectors& refs, double period,
                                      std::uint64_t seed);

/// Uniform draw on [-1,1]^4, rejected below norm 1e-3, normalized.
UnitQuaternion sample_initial_quaternion(Rng& rng);
UnitQuaternion sample_initial_quaternion(std::uint64_t seed);

/// Everything needed to simulate one episode.
struct SimulationConfig {
  AngularVelocityProfile profile = AngularVelocityProfile::training();
  NoiseModel noise = NoiseModel::paper_training();
  ReferenceVectors refs;
  double period = 0.01;
  std::size_t frames = 1000;
};

/// Samples a random true initial attitude from `seed` and synthesizes an episode.
EpisodeRecord simulate_episode(const SimulationConfig& config, std::uint64_t seed);

/// Deterministic, well-mixed seed for stream `index` derived from `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace rlcekf
