#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

namespace rlcekf {

struct DenseLayer {
  Eigen::MatrixXf W;  // out x in
  Eigen::VectorXf b;
  bool operator==(const DenseLayer& o) const { return W == o.W && b == o.b; }
};

/// Fully connected tanh network. Hidden layers use tanh; the output is
/// either linear or `output_scale * tanh(.)`.
class Mlp {
 public:
  enum class Output { kLinear, kScaledTanh };

  /// Per-layer activations of a batch forward pass (column = sample).
  struct Tape {
    std::vector<Eigen::MatrixXf> activations;  // input, hidden..., output
  };
  using Gradients = std::vector<DenseLayer>;

  Mlp() = default;
  Mlp(const std::vector<int>& sizes, Output output, float output_scale = 1.0f);

  /// Glorot-uniform hidden weights, N(0, final_std^2) output weights, zero biases.
  void initialize(std::mt19937_64& rng, float final_std);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Output output_kind() const { return output_; }
  float output_scale() const { return output_scale_; }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  Eigen::VectorXf forward(const Eigen::VectorXf& x) const;
  Eigen::MatrixXf forward(const Eigen::MatrixXf& x, Tape* tape) const;

  /// Backpropagates dL/dY through a recorded pass. Accumulates parameter
  /// gradients into `grads` (when non-null) and returns dL/dX.
  Eigen::MatrixXf backward(const Tape& tape, const Eigen::MatrixXf& dy, Gradients* grads) const;

  Gradients zero_gradients() const;

  bool operator==(const Mlp& o) const {
    return sizes_ == o.sizes_ && output_ == o.output_ && output_scale_ == o.output_scale_ &&
           layers_ == o.layers_;
  }

 private:
  std::vector<int> sizes_;
  Output output_ = Output::kLinear;
  float output_scale_ = 1.0f;
  std::vector<DenseLayer> layers_;
};

/// target <- kappa * source + (1 - kappa) * target.
void polyak_update(Mlp& target, const Mlp& source, float kappa);

class Adam {
 public:
  explicit Adam(const Mlp& net, float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f);
  void step(Mlp& net, const Mlp::Gradients& grads, float lr);

 private:
  Mlp::Gradients m_, v_;
  float beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace rlcekf
