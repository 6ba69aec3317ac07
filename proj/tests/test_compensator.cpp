#include <gtest/gtest.h>

#include <cmath>

#include "rlcekf/compensator.hpp"
#include "rlcekf/ekf.hpp"
#include "rlcekf/errors.hpp"
#include "rlcekf/imu_sim.hpp"
#include "test_support.hpp"

namespace rlcekf {
namespace {

using test::kPi;

CompensatorPolicy random_policy(std::uint64_t seed, float final_std, InnovationFrame frame) {
  PolicyShape shape;
  shape.actor_hidden = {16};
  shape.critic_hidden = {16};
  shape.frame = frame;
  return CompensatorPolicy::create(shape, seed, final_std);
}

EpisodeRecord noisy_episode(std::size_t frames, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.frames = frames;
  return simulate_episode(cfg, seed);
}

TEST(RlInnovation, ZeroForPerfectNoiselessEstimate) {
  std::mt19937_64 rng(1);
  const ReferenceVectors refs;
  const UnitQuaternion q = test::random_quat(rng);
  MeasurementFrame f;
  const Vec6 h = measurement_model(q, refs);
  f.acc = h.head<3>();
  f.mag = h.tail<3>();
  EXPECT_LT(rl_innovation(q, f, refs).norm(), 1e-15);
}

TEST(RlInnovation, BoundedByMeasurementNorm) {
  std::mt19937_64 rng(2);
  const ReferenceVectors refs;
  for (int i = 0; i < 1000; ++i) {
    MeasurementFrame f;
    f.acc = test::random_vec3(rng, 3.0);
    f.mag = test::random_vec3(rng, 3.0);
    EXPECT_LE(rl_innovation(test::random_quat(rng), f, refs).norm(), f.observation().norm() + 2.0);
  }
}

TEST(RlInnovation, MatchesResidualAtCorrectedState) {
  const EpisodeRecord ep = noisy_episode(300, 3);
  const EkfParams params = EkfParams::from_noise(ep.noise, ReferenceVectors{});
  const CompensatorPolicy policy = random_policy(4, 0.1f, InnovationFrame::kBody);
  RlcEkf f(params, &policy, sample_initial_quaternion(5));
  for (std::size_t k = 1; k < ep.size(); ++k) {
    const auto& info = f.step(ep.frames[k - 1], ep.frames[k], ep.period);
    const Vec6 expected = ep.frames[k].observation() - measurement_model(info.ekf_state.q, params.refs);
    EXPECT_LT((info.innovation - expected).norm(), 1e-12);
    EXPECT_EQ(info.resolved_innovation, info.innovation);
  }
}

TEST(ResolveInnovation, RotatesBothBlocksIntoNavigationFrame) {
  std::mt19937_64 rng(6);
  const UnitQuaternion q = test::random_quat(rng);
  Vec6 e;
  e << test::random_vec3(rng), test::random_vec3(rng);
  const Vec6 r = resolve_innovation(e, q, InnovationFrame::kNavigation);
  EXPECT_LT((r.head<3>() - rotate(q, e.head<3>())).norm(), 1e-14);
  EXPECT_LT((r.tail<3>() - rotate(q, e.tail<3>())).norm(), 1e-14);
  EXPECT_EQ(resolve_innovation(e, q, InnovationFrame::kBody), e);
}

TEST(Compensate, ZeroGainIsIdentity) {
  std::mt19937_64 rng(7);
  FilterState s;
  s.q = test::random_quat(rng).coeffs();
  s.P = test::random_psd4(rng);
  Vec6 e;
  e << test::random_vec3(rng), test::random_vec3(rng);
  const CompensationResult r = compensate_with_gain(s, e, Mat36::Zero(), InnovationFrame::kNavigation);
  EXPECT_EQ(r.state, s);
  EXPECT_EQ(r.correction, Vec3::Zero());
  const CompensatorPolicy zero = CompensatorPolicy::zero();
  EXPECT_EQ(zero.gain(test::random_vec3(rng)), Mat36::Zero());
  EXPECT_EQ(compensate(s, e, zero, test::random_vec3(rng)).state, s);
}

TEST(Compensate, InjectsOnTheLeft) {
  std::mt19937_64 rng(8);
  FilterState s;
  s.q = test::random_quat(rng).coeffs();
  Mat36 U = Mat36::Zero();
  U.leftCols<3>() = Mat3::Identity();
  Vec6 e;
  e << 0.1, -0.2, 0.05, 0.3, 0.3, 0.3;
  const CompensationResult r = compensate_with_gain(s, e, U, InnovationFrame::kBody);
  EXPECT_LT((r.correction - e.head<3>()).norm(), 1e-15);
  const Vec4 expected = hamilton(exp_map(e.head<3>()).coeffs(), s.q);
  EXPECT_LT((r.state.q - expected).norm(), 1e-15);
  const Mat4 M = left_matrix(exp_map(e.head<3>()));
  EXPECT_LT((r.state.P - M * s.P * M.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Compensate, CovarianceStaysPsd) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    FilterState s;
    s.q = test::random_quat(rng).coeffs();
    s.P = test::random_psd4(rng);
    Mat36 U;
    for (Eigen::Index k = 0; k < U.size(); ++k) U.data()[k] = u(rng);
    Vec6 e;
    e << test::random_vec3(rng), test::random_vec3(rng);
    const CompensationResult r = compensate_with_gain(s, e, U, InnovationFrame::kNavigation);
    ASSERT_EQ(r.state.P, r.state.P.transpose());
    ASSERT_GE(test::min_eigenvalue(r.state.P), -1e-12 * s.P.norm());
    ASSERT_NEAR(r.state.q.norm(), 1.0, 1e-12);
  }
}

TEST(Compensate, CorrectionBoundHoldsEveryStep) {
  const EpisodeRecord ep = noisy_episode(500, 10);
  const EkfParams params = EkfParams::from_noise(ep.noise, ReferenceVectors{});
  for (auto frame : {InnovationFrame::kNavigation, InnovationFrame::kBody}) {
    const CompensatorPolicy policy = random_policy(11, 50.0f, frame);
    RlcEkf f(params, &policy, sample_initial_quaternion(12));
    for (std::size_t k = 1; k < ep.size(); ++k) {
      const auto& info = f.step(ep.frames[k - 1], ep.frames[k], ep.period);
      EXPECT_LE(info.correction.norm(),
                policy.u_max * std::sqrt(18.0) * info.innovation.norm() * (1 + 1e-12));
      EXPECT_LE(info.gain.cwiseAbs().maxCoeff(), policy.u_max);
    }
  }
}

TEST(Compensate, ExplorationNoiseIsClipped) {
  const EpisodeRecord ep = noisy_episode(10, 13);
  const EkfParams params = EkfParams::from_noise(ep.noise, ReferenceVectors{});
  const CompensatorPolicy policy = random_policy(14, 0.01f, InnovationFrame::kNavigation);
  RlcEkf f(params, &policy, sample_initial_quaternion(15));
  const Mat36 noise = Mat36::Constant(5.0);
  const auto& info = f.step(ep.frames[0], ep.frames[1], ep.period, &noise);
  EXPECT_EQ(info.gain, Mat36::Constant(policy.u_max));
}

TEST(RlcEkf, ZeroPolicyIsBitIdenticalToEkf) {
  const EpisodeRecord ep = noisy_episode(1001, 16);
  const EkfParams params = EkfParams::from_noise(ep.noise, ReferenceVectors{});
  const CompensatorPolicy zero = CompensatorPolicy::zero();
  const UnitQuaternion init = sample_initial_quaternion(17);
  AttitudeEkf ekf(params, init);
  RlcEkf rlc(params, &zero, init);
  for (std::size_t k = 1; k < ep.size(); ++k) {
    ekf.step(ep.frames[k - 1], ep.frames[k], ep.period);
    rlc.step(ep.frames[k - 1], ep.frames[k], ep.period);
    ASSERT_EQ(ekf.state(), rlc.state()) << "frame " << k;
  }
}

TEST(CompensatorPolicy, GainIsRowMajorActorOutput) {
  CompensatorPolicy p = CompensatorPolicy::zero();
  auto& last = p.actor.layers().back();
  for (int i = 0; i < 18; ++i) last.b[i] = 0.01f * static_cast<float>(i + 1);
  const Mat36 U = p.gain(Vec3::Zero());
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 6; ++c) {
      EXPECT_NEAR(U(r, c), std::tanh(0.01 * (r * 6 + c + 1)), 1e-6);
    }
  }
}

TEST(CompensatorPolicy, Validation) {
  CompensatorPolicy p = CompensatorPolicy::create(PolicyShape{}, 1);
  EXPECT_NO_THROW(p.validate());
  CompensatorPolicy bad = p;
  bad.actor.layers()[0].W(0, 0) = std::nanf("");
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = p;
  bad.actor = Mlp({3, 4, 17}, Mlp::Output::kScaledTanh);
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = p;
  bad.u_max = 2.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  PolicyShape shape;
  shape.gamma = 1.0;
  EXPECT_THROW(CompensatorPolicy::create(shape, 1), ConfigError);
}

TEST(CompensatorPolicy, NearZeroInitialGain) {
  const CompensatorPolicy p = CompensatorPolicy::create(PolicyShape{}, 3);
  EXPECT_LT(p.gain(Vec3(0.01, -0.02, 0.0)).cwiseAbs().maxCoeff(), 0.1);
}

TEST(EpisodeCost, Examples) {
  std::mt19937_64 rng(18);
  const UnitQuaternion q = test::random_quat(rng);
  EXPECT_NEAR(episode_cost(q, q), 0.0, 1e-24);
  const UnitQuaternion flipped = exp_map(Vec3(0, kPi, 0)) * q;
  EXPECT_NEAR(episode_cost(q, flipped), kPi * kPi, 1e-9);
  for (int i = 0; i < 1000; ++i) {
    const UnitQuaternion a = test::random_quat(rng), b = test::random_quat(rng);
    EXPECT_NEAR(episode_cost(a, b), episode_cost(b, a), 1e-12);
  }
}

}  // namespace
}  // namespace rlcekf
