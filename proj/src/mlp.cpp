#include "rlcekf/mlp.hpp"

#include <cmath>

#include "rlcekf/errors.hpp"

namespace rlcekf {

Mlp::Mlp(const std::vector<int>& sizes, Output output, float output_scale)
    : sizes_(sizes), output_(output), output_scale_(output_scale) {
  if (sizes_.size() < 2) throw ConfigError("network needs at least an input and an output layer");
  for (int s : sizes_) {
    if (s <= 0) throw ConfigError("layer sizes must be positive");
  }
  if (!(output_scale_ > 0.0f)) throw ConfigError("output scale must be positive");
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    layers_.push_back({Eigen::MatrixXf::Zero(sizes_[i + 1], sizes_[i]),
                       Eigen::VectorXf::Zero(sizes_[i + 1])});
  }
}

void Mlp::initialize(std::mt19937_64& rng, float final_std) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    l.b.setZero();
    if (i + 1 == layers_.size()) {
      std::normal_distribution<float> n(0.0f, final_std);
      for (Eigen::Index k = 0; k < l.W.size(); ++k) l.W.data()[k] = final_std > 0.0f ? n(rng) : 0.0f;
    } else {
      const float limit = std::sqrt(6.0f / static_cast<float>(l.W.rows() + l.W.cols()));
      std::uniform_real_distribution<float> u(-limit, limit);
      for (Eigen::Index k = 0; k < l.W.size(); ++k) l.W.data()[k] = u(rng);
    }
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
  return n;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.W.allFinite() || !l.b.allFinite()) return false;
  }
  return true;
}

Eigen::VectorXf Mlp::forward(const Eigen::VectorXf& x) const {
  Eigen::VectorXf a = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::VectorXf z = layers_[i].W * a + layers_[i].b;
    if (i + 1 < layers_.size()) {
      a = z.array().tanh();
    } else if (output_ == Output::kScaledTanh) {
      a = output_scale_ * z.array().tanh();
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Eigen::MatrixXf Mlp::forward(const Eigen::MatrixXf& x, Tape* tape) const {
  if (tape) {
    tape->activations.clear();
    tape->activations.push_back(x);
  }
  Eigen::MatrixXf a = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXf z = layers_[i].W * a;
    z.colwise() += layers_[i].b;
    if (i + 1 < layers_.size()) {
      a = z.array().tanh();
    } else if (output_ == Output::kScaledTanh) {
      a = output_scale_ * z.array().tanh();
    } else {
      a = std::move(z);
    }
    if (tape) tape->activations.push_back(a);
  }
  return a;
}

Eigen::MatrixXf Mlp::backward(const Tape& tape, const Eigen::MatrixXf& dy, Gradients* grads) const {
  Eigen::MatrixXf delta = dy;
  for (std::size_t ii = layers_.size(); ii-- > 0;) {
    const Eigen::MatrixXf& out = tape.activations[ii + 1];
    if (ii + 1 < layers_.size()) {
      delta.array() *= 1.0f - out.array().square();
    } else if (output_ == Output::kScaledTanh) {
      delta.array() *= output_scale_ - out.array().square() / output_scale_;
    }
    const Eigen::MatrixXf& in = tape.activations[ii];
    if (grads) {
      (*grads)[ii].W.noalias() += delta * in.transpose();
      (*grads)[ii].b += delta.rowwise().sum();
    }
    delta = layers_[ii].W.transpose() * delta;
  }
  return delta;
}

Mlp::Gradients Mlp::zero_gradients() const {
  Gradients g;
  for (const auto& l : layers_) {
    g.push_back({Eigen::MatrixXf::Zero(l.W.rows(), l.W.cols()), Eigen::VectorXf::Zero(l.b.size())});
  }
  return g;
}

void polyak_update(Mlp& target, const Mlp& source, float kappa) {
  auto& t = target.layers();
  const auto& s = source.layers();
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i].W = kappa * s[i].W + (1.0f - kappa) * t[i].W;
    t[i].b = kappa * s[i].b + (1.0f - kappa) * t[i].b;
  }
}

Adam::Adam(const Mlp& net, float beta1, float beta2, float eps)
    : m_(net.zero_gradients()), v_(net.zero_gradients()), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(Mlp& net, const Mlp::Gradients& grads, float lr) {
  ++t_;
  const float c1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
  const float c2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
  auto& layers = net.layers();
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = beta1_ * m + (1.0f - beta1_) * g;
    v = beta2_ * v + (1.0f - beta2_) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].W, m_[i].W, v_[i].W, grads[i].W);
    update(layers[i].b, m_[i].b, v_[i].b, grads[i].b);
  }
}

}  // namespace rlcekf
