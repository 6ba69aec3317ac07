#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rlcekf/compensator.hpp"
#include "rlcekf/ekf.hpp"
#include "rlcekf/imu_sim.hpp"

namespace rlcekf {

/// One replay-memory entry. Besides (s, U, c, s') it keeps the frame-resolved
/// innovation and the pre-injection attitude error so the actor objective
/// can be re-evaluated for a new gain.
struct Transition {
  Vec3 state = Vec3::Zero();
  Eigen::Matrix<float, 18, 1> action = Eigen::Matrix<float, 18, 1>::Zero();
  double cost = 0.0;
  Vec3 next_state = Vec3::Zero();
  bool terminal = false;
  Vec6 innovation = Vec6::Zero();
  Vec4 error_quat = Vec4(1.0, 0.0, 0.0, 0.0);  // truth ⊗ ekf_estimate*
};

/// Fixed-capacity ring buffer with uniform sampling.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  void push(const Transition& t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  /// Indices drawn uniformly with replacement. Throws ConfigError when fewer
  /// than `batch` transitions are stored.
  std::vector<std::size_t> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> items_;
};

struct TrainingConfig {
  double gamma = 0.5;
  double critic_lr = 1e-3;
  double actor_lr = 3e-4;
  double kappa = 5e-3;
  std::size_t batch_size = 256;
  std::size_t episodes_per_phase = 4;
  std::size_t gradient_steps_per_phase = 100;
  std::size_t phases = 40;
  std::size_t policy_count = 20;
  std::size_t validation_episodes = 50;
  std::size_t replay_capacity = 100000;
  double exploration_start = 0.05;
  double exploration_end = 0.005;
  float actor_final_std = 1e-2f;
  PolicyShape shape;

  void validate() const;
};

/// A trajectory with ground truth and the filter's starting estimate.
struct EpisodeCase {
  EpisodeRecord episode;
  UnitQuaternion initial_estimate;
};

using CaseGenerator = std::function<EpisodeCase(std::uint64_t seed)>;

/// Simulated episodes with random true and estimated initial attitudes.
CaseGenerator simulated_cases(const SimulationConfig& sim);
/// Random `window`-frame windows of a recorded trajectory (with truth) and a
/// random initial estimate.
CaseGenerator dataset_window_cases(EpisodeRecord dataset, std::size_t window);

std::vector<EpisodeCase> make_cases(const CaseGenerator& gen, std::size_t count,
                                    std::uint64_t seed);

struct PhaseStats {
  std::size_t phase = 0;
  double exploration = 0.0;
  double critic_loss = 0.0;
  double actor_objective = 0.0;
};

struct TrainingResult {
  CompensatorPolicy policy;
  /// Mean per-step cost of every data-collection episode, in order.
  std::vector<double> episode_costs;
  std::vector<PhaseStats> phases;
};

/// Alternates data collection with the current (perturbed) policy and
/// gradient phases: critic regression toward c + gamma V_target(s'), actor
/// descent on c(s, pi(s)) + gamma V(pi(s) eps), Polyak target mixing.
/// Throws NumericalError on a non-finite loss.
TrainingResult train(const CaseGenerator& cases, const EkfParams& ekf,
                     const TrainingConfig& config, std::uint64_t seed);

/// Mean per-step cost of a policy (nullptr = vanilla EKF) over cases.
double validation_cost(const CompensatorPolicy* policy, const std::vector<EpisodeCase>& cases,
                       const EkfParams& ekf);

struct SelectionResult {
  std::size_t index = 0;
  std::vector<double> costs;
};

/// argmin of validation cost, ties to the lowest index. Throws ConfigError on
/// empty inputs.
SelectionResult select_policy(const std::vector<CompensatorPolicy>& policies,
                              const std::vector<EpisodeCase>& validation, const EkfParams& ekf);

struct ProtocolResult {
  std::vector<TrainingResult> candidates;
  SelectionResult selection;
  /// Validation cost of the uncompensated EKF on the same cases.
  double zero_policy_cost = 0.0;

  const CompensatorPolicy& selected() const { return candidates[selection.index].policy; }
};

/// Trains config.policy_count candidates with distinct seeds and selects the
/// one with the lowest validation cost over config.validation_episodes cases
/// drawn from the same generator.
ProtocolResult train_and_select(const CaseGenerator& cases, const EkfParams& ekf,
                                const TrainingConfig& config, std::uint64_t seed);

/// Moving average with a trailing window (shorter at the start).
std::vector<double> smooth(const std::vector<double>& xs, std::size_t window);

}  // namespace rlcekf
