#include "rlcekf/imu_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rlcekf/errors.hpp"

namespace rlcekf {

namespace {

// Matrix square root L with L L^T = cov for a symmetric PSD covariance.
Mat3 covariance_factor(const Mat3& cov) {
  if (cov.isZero(0.0)) return Mat3::Zero();
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 sqrt_vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * sqrt_vals.asDiagonal();
}

void check_covariance(const Mat3& cov, const char* name) {
  if (!cov.allFinite()) throw ConfigError(std::string(name) + " covariance is not finite");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConfigError(std::string(name) + " covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw ConfigError(std::string(name) + " covariance is not positive semidefinite");
  }
}

Vec3 gaussian3(Rng& rng, std::normal_distribution<double>& normal) {
  Vec3 z;
  for (int i = 0; i < 3; ++i) z[i] = normal(rng);
  return z;
}

}  // namespace

Vec3 ReferenceVectors::magnetic_from_dip(double dip_rad) {
  return {std::cos(dip_rad), 0.0, -std::sin(dip_rad)};
}

AngularVelocityProfile::AngularVelocityProfile(Kind kind, double max_rate)
    : kind_(std::move(kind)), max_rate_(max_rate) {
  if (!(max_rate_ > 0.0)) throw ConfigError("max angular rate must be positive");
  const double bound = std::visit(
      [](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Zero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, Constant>) {
          return k.rate.norm();
        } else if constexpr (std::is_same_v<T, Sinusoid>) {
          if (!k.amplitude.allFinite() || !k.frequency_hz.allFinite() || !k.phase.allFinite()) {
            throw ConfigError("sinusoid profile parameters must be finite");
          }
          return k.amplitude.norm();
        } else {
          if (k.start_times.size() != k.rates.size() || k.rates.empty()) {
            throw ConfigError("piecewise profile needs one rate per start time");
          }
          if (!std::is_sorted(k.start_times.begin(), k.start_times.end())) {
            throw ConfigError("piecewise profile start times must be sorted");
          }
          double m = 0.0;
          for (const auto& r : k.rates) m = std::max(m, r.norm());
          return m;
        }
      },
      kind_);
  if (!(bound <= max_rate_)) {
    throw ConfigError("angular velocity profile exceeds the configured maximum rate");
  }
}

Vec3 AngularVelocityProfile::operator()(double t) const {
  return std::visit(
      [t](const auto& k) -> Vec3 {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Zero>) {
          return Vec3::Zero();
        } else if constexpr (std::is_same_v<T, Constant>) {
          return k.rate;
        } else if constexpr (std::is_same_v<T, Sinusoid>) {
          Vec3 w;
          for (int i = 0; i < 3; ++i) {
            w[i] = k.amplitude[i] *
                   std::sin(2.0 * std::numbers::pi * k.frequency_hz[i] * t + k.phase[i]);
          }
          return w;
        } else {
          const auto it = std::upper_bound(k.start_times.begin(), k.start_times.end(), t);
          const auto idx = it == k.start_times.begin()
                               ? 0
                               : static_cast<std::size_t>(it - k.start_times.begin()) - 1;
          return k.rates[idx];
        }
      },
      kind_);
}

AngularVelocityProfile AngularVelocityProfile::training() {
  return AngularVelocityProfile(Sinusoid{Vec3(1.0, 1.0, 1.0), Vec3(0.3, 0.4, 0.5), Vec3::Zero()});
}

AngularVelocityProfile AngularVelocityProfile::evaluation() {
  return AngularVelocityProfile(
      Sinusoid{Vec3(0.8, 0.6, 1.0), Vec3(0.15, 0.25, 0.35), Vec3(0.0, 1.0, 2.0)});
}

NoiseModel NoiseModel::paper_training() {
  NoiseModel n;
  n.gyro_cov = 0.0003 * Mat3::Identity();
  n.acc_cov = 0.0005 * Mat3::Identity();
  n.mag_cov = 0.0003 * Mat3::Identity();
  return n;
}

void NoiseModel::validate() const {
  check_covariance(gyro_cov, "gyroscope");
  check_covariance(acc_cov, "accelerometer");
  check_covariance(mag_cov, "magnetometer");
  if (!gyro_bias.allFinite()) throw ConfigError("gyro bias must be finite");
  for (const auto& s : scale_schedule) {
    if (!(s.gyro > 0.0 && s.acc > 0.0 && s.mag > 0.0)) {
      throw ConfigError("covariance scale multipliers must be positive");
    }
    if (!(s.end >= s.begin)) throw ConfigError("covariance scale interval is reversed");
  }
}

EpisodeRecord EpisodeRecord::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > frames.size()) throw ConfigError("episode slice out of range");
  EpisodeRecord out;
  out.period = period;
  out.noise = noise;
  out.seed = seed;
  out.frames.assign(frames.begin() + static_cast<std::ptrdiff_t>(begin),
                    frames.begin() + static_cast<std::ptrdiff_t>(begin + count));
  if (has_truth()) {
    out.truth.assign(truth.begin() + static_cast<std::ptrdiff_t>(begin),
                     truth.begin() + static_cast<std::ptrdiff_t>(begin + count));
  }
  return out;
}

std::vector<UnitQuaternion> integrate_truth(const UnitQuaternion& q0,
                                            const AngularVelocityProfile& profile,
                                            double period, std::size_t steps) {
  if (!(period > 0.0)) throw ConfigError("sample period must be positive");
  std::vector<UnitQuaternion> out;
  out.reserve(steps + 1);
  out.push_back(q0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * period;
    out.push_back(out.back() * exp_map(period * profile(t_prev)));
  }
  return out;
}

EpisodeRecord synthesize_measurements(const std::vector<UnitQuaternion>& truth,
                                      const AngularVelocityProfile& profile,
                                      const NoiseModel& noise,
                                      const ReferenceVectors& refs, double period,
                                      std::uint64_t seed) {
  noise.validate();
  if (truth.size() < 2) throw ConfigError("an episode needs at least two frames");
  if (!(period > 0.0)) throw ConfigError("sample period must be positive");

  const Mat3 lg = covariance_factor(noise.gyro_cov);
  const Mat3 la = covariance_factor(noise.acc_cov);
  const Mat3 lm = covariance_factor(noise.mag_cov);

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  EpisodeRecord rec;
  rec.period = period;
  rec.truth = truth;
  rec.noise = noise;
  rec.seed = seed;
  rec.frames.reserve(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double t = static_cast<double>(k) * period;
    double sg = 1.0, sa = 1.0, sm = 1.0;
    for (const auto& s : noise.scale_schedule) {
      if (t >= s.begin && t < s.end) {
        sg *= s.gyro;
        sa *= s.acc;
        sm *= s.mag;
      }
    }
    const Vec3 eg = std::sqrt(sg) * (lg * gaussian3(rng, normal));
    const Vec3 ea = std::sqrt(sa) * (la * gaussian3(rng, normal));
    const Vec3 em = std::sqrt(sm) * (lm * gaussian3(rng, normal));

    const Mat3 r_bn = to_rotation_matrix(truth[k]).transpose();
    MeasurementFrame f;
    f.t = t;
    f.gyro = profile(t) + noise.gyro_bias + eg;
    f.acc = -(r_bn * refs.gravity) + ea;
    f.mag = r_bn * refs.magnetic + em;
    rec.frames.push_back(f);
  }
  return rec;
}

UnitQuaternion sample_initial_quaternion(Rng& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (;;) {
    Vec4 c;
    for (int i = 0; i < 4; ++i) c[i] = uni(rng);
    if (c.norm() >= 1e-3) return UnitQuaternion(c);
  }
}

UnitQuaternion sample_initial_quaternion(std::uint64_t seed) {
  Rng rng(seed);
  return sample_initial_quaternion(rng);
}

EpisodeRecord simulate_episode(const SimulationConfig& config, std::uint64_t seed) {
  if (config.frames < 2) throw ConfigError("an episode needs at least two frames");
  const UnitQuaternion q0 = sample_initial_quaternion(derive_seed(seed, 0));
  const auto truth = integrate_truth(q0, config.profile, config.period, config.frames - 1);
  return synthesize_measurements(truth, config.profile, config.noise, config.refs,
                                 config.period, derive_seed(seed, 1));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace rlcekf
