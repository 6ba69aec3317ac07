#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rlcekf/baselines.hpp"
#include "rlcekf/ekf.hpp"
#include "rlcekf/imu_sim.hpp"
#include "rlcekf/metrics.hpp"
#include "test_support.hpp"

namespace rlcekf {
namespace {

MeasurementFrame stationary_frame(const UnitQuaternion& truth, const ReferenceVectors& refs) {
  MeasurementFrame f;
  const Vec6 h = measurement_model(truth, refs);
  f.acc = h.head<3>();
  f.mag = h.tail<3>();
  return f;
}

TEST(ComplementaryFilter, ZeroGainZeroRateIsIdentity) {
  std::mt19937_64 rng(1);
  const ReferenceVectors refs;
  const CfState s{test::random_quat(rng), 0.0};
  const CfState n = cf_step(s, stationary_frame(test::random_quat(rng), refs), 0.01, refs);
  EXPECT_EQ(n.q, s.q);
}

double cf_time_to(double threshold, const UnitQuaternion& truth, CfState s, double limit) {
  const ReferenceVectors refs;
  const MeasurementFrame f = stationary_frame(truth, refs);
  double t = 0.0;
  while (t < limit && total_error(truth, s.q) >= threshold) {
    s = cf_step(s, f, 0.01, refs);
    EXPECT_NEAR(s.q.coeffs().norm(), 1.0, 1e-12);
    t += 0.01;
  }
  return total_error(truth, s.q) < threshold ? t : std::numeric_limits<double>::infinity();
}

TEST(ComplementaryFilter, ConvergesWithin30sFromModerateErrors) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const UnitQuaternion truth = test::random_quat(rng);
    const UnitQuaternion start = exp_map(test::random_rotvec(rng, 1.5)) * truth;
    EXPECT_LT(cf_time_to(0.05, truth, {start, CfState::kDefaultBeta}, 30.0), 30.0) << seed;
  }
}

TEST(ComplementaryFilter, ConvergesFromUniformRandomErrors) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const UnitQuaternion truth = test::random_quat(rng);
    const UnitQuaternion start = test::random_quat(rng);
    EXPECT_LT(cf_time_to(0.05, truth, {start, CfState::kDefaultBeta}, 120.0), 120.0) << seed;
  }
}

TEST(ComplementaryFilter, LargerGainConvergesFasterOnNoiselessData) {
  const ReferenceVectors refs;
  std::mt19937_64 rng(3);
  const UnitQuaternion truth = test::random_quat(rng);
  const UnitQuaternion start = exp_map(Vec3(1.0, -0.5, 0.5)) * truth;
  const MeasurementFrame f = stationary_frame(truth, refs);
  double previous = 1e9;
  for (double beta : {0.041, 0.41, 4.1}) {
    CfState s{start, beta};
    int steps = 0;
    while (total_error(truth, s.q) >= 0.1 && steps < 100000) {
      s = cf_step(s, f, 0.01, refs);
      ++steps;
    }
    EXPECT_LT(steps, previous) << "beta " << beta;
    previous = steps;
  }
}

TEST(GyroIntegration, ZeroRateIsIdentity) {
  std::mt19937_64 rng(4);
  const UnitQuaternion q = test::random_quat(rng);
  EXPECT_EQ(gyro_integrate_step(q, Vec3::Zero(), 0.01), q);
}

TEST(GyroIntegration, MatchesTruthIntegration) {
  std::mt19937_64 rng(5);
  const auto profile = AngularVelocityProfile::training();
  const UnitQuaternion q0 = test::random_quat(rng);
  const auto truth = integrate_truth(q0, profile, 0.01, 500);
  UnitQuaternion q = q0;
  for (std::size_t k = 1; k < truth.size(); ++k) {
    q = gyro_integrate_step(q, profile(0.01 * static_cast<double>(k - 1)), 0.01);
    EXPECT_EQ(q, truth[k]);
  }
}

TEST(GyroIntegration, BiasDriftIsLinear) {
  const Vec3 b(0.02, 0.02, 0.02);
  UnitQuaternion q;
  const double T = 0.01;
  for (int k = 0; k < 1000; ++k) q = gyro_integrate_step(q, b, T);
  const double drift = total_error(UnitQuaternion::identity(), q);
  EXPECT_NEAR(drift, b.norm() * 10.0, 0.05 * b.norm() * 10.0);
}

}  // namespace
}  // namespace rlcekf
