#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rlcekf/errors.hpp"
#include "rlcekf/mlp.hpp"

namespace rlcekf {
namespace {

// Independent double-precision evaluation of a tanh MLP with scalar loss
// L = sum(w .* y) for a fixed weighting w.
double reference_loss(const std::vector<Eigen::MatrixXd>& W, const std::vector<Eigen::VectorXd>& b,
                      const Eigen::VectorXd& x, const Eigen::VectorXd& w, bool scaled_tanh,
                      double scale) {
  Eigen::VectorXd a = x;
  for (std::size_t i = 0; i < W.size(); ++i) {
    Eigen::VectorXd z = W[i] * a + b[i];
    if (i + 1 < W.size()) {
      a = z.array().tanh();
    } else {
      a = scaled_tanh ? Eigen::VectorXd(scale * z.array().tanh()) : z;
    }
  }
  return w.dot(a);
}

class MlpGradient : public ::testing::TestWithParam<Mlp::Output> {};

TEST_P(MlpGradient, BackwardMatchesFiniteDifferences) {
  const bool scaled = GetParam() == Mlp::Output::kScaledTanh;
  Mlp net({3, 8, 6, 4}, GetParam(), 1.5f);
  std::mt19937_64 rng(1);
  net.initialize(rng, 0.5f);
  for (auto& l : net.layers()) l.b.setRandom();

  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
  for (const auto& l : net.layers()) {
    W.push_back(l.W.cast<double>());
    b.push_back(l.b.cast<double>());
  }
  const Eigen::Vector3d x(0.3, -0.7, 0.2);
  const Eigen::Vector4d w(1.0, -2.0, 0.5, 0.25);

  Mlp::Tape tape;
  const Eigen::MatrixXf xs = x.cast<float>();
  net.forward(xs, &tape);
  auto grads = net.zero_gradients();
  const Eigen::MatrixXf dx = net.backward(tape, w.cast<float>(), &grads);

  const double h = 1e-6;
  for (std::size_t li = 0; li < W.size(); ++li) {
    for (Eigen::Index k = 0; k < W[li].size(); ++k) {
      auto Wp = W, Wm = W;
      Wp[li].data()[k] += h;
      Wm[li].data()[k] -= h;
      const double fd = (reference_loss(Wp, b, x, w, scaled, 1.5) -
                         reference_loss(Wm, b, x, w, scaled, 1.5)) / (2 * h);
      EXPECT_NEAR(grads[li].W.data()[k], fd, 1e-4 + 1e-3 * std::abs(fd));
    }
    for (Eigen::Index k = 0; k < b[li].size(); ++k) {
      auto bp = b, bm = b;
      bp[li][k] += h;
      bm[li][k] -= h;
      const double fd = (reference_loss(W, bp, x, w, scaled, 1.5) -
                         reference_loss(W, bm, x, w, scaled, 1.5)) / (2 * h);
      EXPECT_NEAR(grads[li].b[k], fd, 1e-4 + 1e-3 * std::abs(fd));
    }
  }
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const double fd = (reference_loss(W, b, xp, w, scaled, 1.5) -
                       reference_loss(W, b, xm, w, scaled, 1.5)) / (2 * h);
    EXPECT_NEAR(dx(k, 0), fd, 1e-4 + 1e-3 * std::abs(fd));
  }
}

INSTANTIATE_TEST_SUITE_P(Outputs, MlpGradient,
                         ::testing::Values(Mlp::Output::kLinear, Mlp::Output::kScaledTanh));

TEST(Mlp, BatchForwardMatchesSingle) {
  Mlp net({3, 16, 18}, Mlp::Output::kScaledTanh, 1.0f);
  std::mt19937_64 rng(2);
  net.initialize(rng, 0.3f);
  Eigen::MatrixXf X = Eigen::MatrixXf::Random(3, 5);
  const Eigen::MatrixXf Y = net.forward(X, nullptr);
  for (int j = 0; j < 5; ++j) {
    EXPECT_LT((Y.col(j) - net.forward(Eigen::VectorXf(X.col(j)))).norm(), 1e-6f);
  }
}

TEST(Mlp, OutputBoundAndShape) {
  Mlp net({3, 4, 18}, Mlp::Output::kScaledTanh, 0.7f);
  std::mt19937_64 rng(3);
  net.initialize(rng, 100.0f);
  EXPECT_EQ(net.parameter_count(), 3u * 4 + 4 + 4 * 18 + 18);
  const Eigen::VectorXf y = net.forward(Eigen::VectorXf::Constant(3, 5.0f));
  EXPECT_LE(y.cwiseAbs().maxCoeff(), 0.7f);
}

TEST(Mlp, InitializationScales) {
  Mlp net({3, 64, 64, 18}, Mlp::Output::kScaledTanh);
  std::mt19937_64 rng(4);
  net.initialize(rng, 1e-2f);
  const auto& last = net.layers().back().W;
  const double var = last.cwiseAbs2().mean();
  EXPECT_NEAR(std::sqrt(var), 1e-2, 1e-3);
  for (const auto& l : net.layers()) EXPECT_EQ(l.b, Eigen::VectorXf::Zero(l.b.size()));
  Mlp zero({3, 4, 2}, Mlp::Output::kLinear);
  zero.initialize(rng, 0.0f);
  EXPECT_EQ(zero.layers().back().W, Eigen::MatrixXf::Zero(2, 4));
}

TEST(Mlp, RejectsBadShapes) {
  EXPECT_THROW(Mlp({3}, Mlp::Output::kLinear), ConfigError);
  EXPECT_THROW(Mlp({3, 0, 2}, Mlp::Output::kLinear), ConfigError);
  EXPECT_THROW(Mlp({3, 2}, Mlp::Output::kScaledTanh, 0.0f), ConfigError);
}

TEST(Polyak, MixesParameters) {
  Mlp a({2, 3, 1}, Mlp::Output::kLinear), b({2, 3, 1}, Mlp::Output::kLinear);
  std::mt19937_64 rng(5);
  a.initialize(rng, 1.0f);
  b.initialize(rng, 1.0f);
  Mlp t = b;
  polyak_update(t, a, 0.0f);
  EXPECT_EQ(t, b);
  polyak_update(t, a, 1.0f);
  EXPECT_EQ(t, a);
  t = b;
  polyak_update(t, a, 0.25f);
  for (std::size_t i = 0; i < t.layers().size(); ++i) {
    const Eigen::MatrixXf expected = 0.25f * a.layers()[i].W + 0.75f * b.layers()[i].W;
    EXPECT_LT((t.layers()[i].W - expected).cwiseAbs().maxCoeff(), 1e-6f);
  }
}

TEST(Adam, FirstStepMovesBySignTimesRate) {
  Mlp net({2, 2}, Mlp::Output::kLinear);
  net.layers()[0].W << 1, 2, 3, 4;
  auto g = net.zero_gradients();
  g[0].W << 0.5f, -3.0f, 1e-3f, 0.0f;
  g[0].b << 2.0f, -2.0f;
  Adam opt(net);
  opt.step(net, g, 0.1f);
  Eigen::MatrixXf expected(2, 2);
  expected << 0.9f, 2.1f, 2.9f, 4.0f;
  EXPECT_LT((net.layers()[0].W - expected).cwiseAbs().maxCoeff(), 1e-4f);
  EXPECT_LT((net.layers()[0].b - Eigen::Vector2f(-0.1f, 0.1f)).cwiseAbs().maxCoeff(), 1e-5f);
}

TEST(Adam, ZeroRateLeavesParameters) {
  Mlp net({2, 3, 2}, Mlp::Output::kLinear);
  std::mt19937_64 rng(6);
  net.initialize(rng, 1.0f);
  const Mlp before = net;
  auto g = net.zero_gradients();
  for (auto& l : g) l.W.setOnes();
  Adam opt(net);
  opt.step(net, g, 0.0f);
  EXPECT_EQ(net, before);
}

}  // namespace
}  // namespace rlcekf
