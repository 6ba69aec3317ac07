#include "rlcekf/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rlcekf/errors.hpp"
#include "rlcekf/parallel.hpp"

namespace rlcekf {

namespace {

using Action = Eigen::Matrix<float, 18, 1>;

Action flatten(const Mat36& u) {
  Action a;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 6; ++c) a[r * 6 + c] = static_cast<float>(u(r, c));
  }
  return a;
}

// Squared attitude error after injecting `correction` on top of the EKF
// estimate whose error is `error_quat`.
double injected_cost(const Vec4& error_quat, const Vec3& correction) {
  const UnitQuaternion e = UnitQuaternion::from_unit_coeffs(error_quat);
  return log_map(e * exp_map(correction).conjugate()).squaredNorm();
}

Vec3 injected_cost_gradient(const Vec4& error_quat, const Vec3& correction) {
  constexpr double h = 1e-6;
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 p = correction, m = correction;
    p[i] += h;
    m[i] -= h;
    g[i] = (injected_cost(error_quat, p) - injected_cost(error_quat, m)) / (2.0 * h);
  }
  return g;
}

struct Rollout {
  std::vector<Transition> transitions;
  double mean_cost = 0.0;
};

Rollout collect_episode(const EpisodeCase& ec, const CompensatorPolicy& policy, const EkfParams& ekf,
                        double sigma, std::uint64_t seed) {
  const auto& ep = ec.episode;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RlcEkf filter(ekf, &policy, ec.initial_estimate);
  Rollout r;
  r.transitions.reserve(ep.size());
  double total = 0.0;
  for (std::size_t k = 1; k < ep.size(); ++k) {
    Mat36 noise;
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = sigma * normal(rng);
    const auto& info = filter.step(ep.frames[k - 1], ep.frames[k], ep.period, &noise);
    Transition t;
    t.state = info.state_in;
    t.action = flatten(info.gain);
    t.cost = episode_cost(ep.truth[k], filter.attitude());
    t.next_state = info.correction;
    t.terminal = k + 1 == ep.size();
    t.innovation = info.resolved_innovation;
    t.error_quat = (ep.truth[k] * info.ekf_state.attitude().conjugate()).coeffs();
    total += t.cost;
    r.transitions.push_back(t);
  }
  r.mean_cost = total / static_cast<double>(ep.size() - 1);
  return r;
}

std::string batch_snapshot(std::uint64_t seed, std::size_t phase, const Eigen::VectorXd& costs,
                           double loss) {
  std::ostringstream os;
  os << "non-finite training loss (seed " << seed << ", phase " << phase << ", loss " << loss
     << ", batch cost mean " << costs.mean() << ", max " << costs.maxCoeff() << ")";
  return os.str();
}

}  // namespace

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayMemory::push(const Transition& t) {
  if (items_.size() < capacity_) {
    items_.push_back(t);
  } else {
    items_[head_] = t;
  }
  head_ = (head_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayMemory::sample(std::size_t batch, Rng& rng) const {
  if (batch == 0 || items_.size() < batch) {
    throw ConfigError("replay memory holds fewer transitions than the batch size");
  }
  std::uniform_int_distribution<std::size_t> u(0, items_.size() - 1);
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = u(rng);
  return idx;
}

void TrainingConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(critic_lr >= 0.0 && actor_lr >= 0.0)) throw ConfigError("learning rates must be non-negative");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError("kappa must lie in (0, 1]");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (episodes_per_phase == 0) throw ConfigError("episodes per phase must be positive");
  if (policy_count == 0) throw ConfigError("policy count must be positive");
  if (replay_capacity < batch_size) throw ConfigError("replay capacity below batch size");
  if (!(exploration_start >= 0.0 && exploration_end >= 0.0)) {
    throw ConfigError("exploration noise must be non-negative");
  }
}

CaseGenerator simulated_cases(const SimulationConfig& sim) {
  return [sim](std::uint64_t seed) {
    EpisodeCase c;
    c.episode = simulate_episode(sim, derive_seed(seed, 0));
    c.initial_estimate = sample_initial_quaternion(derive_seed(seed, 1));
    return c;
  };
}

CaseGenerator dataset_window_cases(EpisodeRecord dataset, std::size_t window) {
  if (!dataset.has_truth()) throw ConfigError("training on a dataset requires ground truth");
  if (window < 2 || window > dataset.size()) {
    throw ConfigError("training window must fit inside the dataset");
  }
  return [dataset = std::move(dataset), window](std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0));
    std::uniform_int_distribution<std::size_t> start(0, dataset.size() - window);
    EpisodeCase c;
    c.episode = dataset.slice(start(rng), window);
    c.initial_estimate = sample_initial_quaternion(derive_seed(seed, 1));
    return c;
  };
}

std::vector<EpisodeCase> make_cases(const CaseGenerator& gen, std::size_t count,
                                    std::uint64_t seed) {
  std::vector<EpisodeCase> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = gen(derive_seed(seed, i)); });
  return out;
}

TrainingResult train(const CaseGenerator& cases, const EkfParams& ekf,
                     const TrainingConfig& config, std::uint64_t seed) {
  config.validate();
  PolicyShape shape = config.shape;
  shape.gamma = config.gamma;
  TrainingResult result;
  result.policy = CompensatorPolicy::create(shape, derive_seed(seed, 0), config.actor_final_std);
  CompensatorPolicy& policy = result.policy;

  Adam critic_opt(policy.critic);
  Adam actor_opt(policy.actor);
  ReplayMemory memory(config.replay_capacity);
  Rng rng(derive_seed(seed, 1));
  const float gamma = static_cast<float>(config.gamma);

  for (std::size_t phase = 0; phase < config.phases; ++phase) {
    const double frac =
        config.phases > 1 ? static_cast<double>(phase) / static_cast<double>(config.phases - 1) : 1.0;
    const double sigma =
        config.exploration_start + frac * (config.exploration_end - config.exploration_start);

    // Data collection: independent rollouts, merged in episode order.
    const std::size_t n = config.episodes_per_phase;
    std::vector<Rollout> rollouts(n);
    const std::uint64_t phase_seed = derive_seed(seed, 1000 + phase);
    parallel_for(n, [&](std::size_t e) {
      const EpisodeCase ec = cases(derive_seed(phase_seed, 2 * e));
      rollouts[e] = collect_episode(ec, policy, ekf, sigma, derive_seed(phase_seed, 2 * e + 1));
    });
    for (const auto& r : rollouts) {
      for (const auto& t : r.transitions) memory.push(t);
      result.episode_costs.push_back(r.mean_cost);
    }

    PhaseStats stats;
    stats.phase = phase;
    stats.exploration = sigma;
    if (memory.size() < config.batch_size) {
      result.phases.push_back(stats);
      continue;
    }

    const auto B = static_cast<Eigen::Index>(config.batch_size);
    const float inv_b = 1.0f / static_cast<float>(B);
    for (std::size_t step = 0; step < config.gradient_steps_per_phase; ++step) {
      const auto idx = memory.sample(config.batch_size, rng);
      Eigen::MatrixXf s(3, B), s_next(3, B);
      Eigen::VectorXd costs(B);
      Eigen::VectorXf not_done(B);
      for (Eigen::Index j = 0; j < B; ++j) {
        const Transition& t = memory[idx[static_cast<std::size_t>(j)]];
        s.col(j) = t.state.cast<float>();
        s_next.col(j) = t.next_state.cast<float>();
        costs[j] = t.cost;
        not_done[j] = t.terminal ? 0.0f : 1.0f;
      }

      // Critic: regress V(s) toward c + gamma V_target(s').
      Mlp::Tape critic_tape;
      const Eigen::MatrixXf v = policy.critic.forward(s, &critic_tape);
      const Eigen::MatrixXf v_next = policy.target_critic.forward(s_next, nullptr);
      Eigen::RowVectorXf target = costs.cast<float>().transpose();
      target.array() += gamma * not_done.transpose().array() * v_next.row(0).array();
      const Eigen::RowVectorXf diff = v.row(0) - target;
      const double critic_loss = static_cast<double>(diff.squaredNorm() * inv_b);
      auto critic_grads = policy.critic.zero_gradients();
      policy.critic.backward(critic_tape, 2.0f * inv_b * diff, &critic_grads);

      // Actor: one-step objective c(eta) + gamma V(eta), eta = pi(s) eps.
      Mlp::Tape actor_tape;
      const Eigen::MatrixXf actions = policy.actor.forward(s, &actor_tape);
      Eigen::MatrixXf eta(3, B);
      std::vector<Vec3> corrections(static_cast<std::size_t>(B));
      double objective = 0.0;
      Eigen::MatrixXf d_eta(3, B);
      for (Eigen::Index j = 0; j < B; ++j) {
        const Transition& t = memory[idx[static_cast<std::size_t>(j)]];
        Mat36 u;
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 6; ++c) u(r, c) = static_cast<double>(actions(r * 6 + c, j));
        }
        const Vec3 corr = u * t.innovation;
        corrections[static_cast<std::size_t>(j)] = corr;
        eta.col(j) = corr.cast<float>();
        objective += injected_cost(t.error_quat, corr);
        d_eta.col(j) = injected_cost_gradient(t.error_quat, corr).cast<float>();
      }
      Mlp::Tape value_tape;
      const Eigen::MatrixXf v_eta = policy.critic.forward(eta, &value_tape);
      objective = (objective + static_cast<double>(gamma * v_eta.sum())) / static_cast<double>(B);
      const Eigen::MatrixXf dv_deta =
          policy.critic.backward(value_tape, Eigen::MatrixXf::Ones(1, B), nullptr);
      d_eta = inv_b * (d_eta + gamma * dv_deta);

      Eigen::MatrixXf d_actions(18, B);
      for (Eigen::Index j = 0; j < B; ++j) {
        const Transition& t = memory[idx[static_cast<std::size_t>(j)]];
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 6; ++c) {
            d_actions(r * 6 + c, j) = d_eta(r, j) * static_cast<float>(t.innovation[c]);
          }
        }
      }
      auto actor_grads = policy.actor.zero_gradients();
      policy.actor.backward(actor_tape, d_actions, &actor_grads);

      if (!std::isfinite(critic_loss) || !std::isfinite(objective)) {
        throw NumericalError(batch_snapshot(seed, phase, costs, critic_loss));
      }
      critic_opt.step(policy.critic, critic_grads, static_cast<float>(config.critic_lr));
      actor_opt.step(policy.actor, actor_grads, static_cast<float>(config.actor_lr));
      polyak_update(policy.target_critic, policy.critic, static_cast<float>(config.kappa));

      stats.critic_loss = critic_loss;
      stats.actor_objective = objective;
    }
    if (!policy.actor.all_finite() || !policy.critic.all_finite()) {
      throw NumericalError(batch_snapshot(seed, phase, Eigen::VectorXd::Zero(1), stats.critic_loss));
    }
    result.phases.push_back(stats);
  }
  return result;
}

double validation_cost(const CompensatorPolicy* policy, const std::vector<EpisodeCase>& cases,
                       const EkfParams& ekf) {
  if (cases.empty()) throw ConfigError("validation set is empty");
  std::vector<double> per_case(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) {
    const auto& ep = cases[i].episode;
    RlcEkf filter(ekf, policy, cases[i].initial_estimate);
    double total = 0.0;
    for (std::size_t k = 1; k < ep.size(); ++k) {
      filter.step(ep.frames[k - 1], ep.frames[k], ep.period);
      total += episode_cost(ep.truth[k], filter.attitude());
    }
    per_case[i] = total / static_cast<double>(ep.size() - 1);
  });
  double sum = 0.0;
  for (double c : per_case) sum += c;
  return sum / static_cast<double>(per_case.size());
}

SelectionResult select_policy(const std::vector<CompensatorPolicy>& policies,
                              const std::vector<EpisodeCase>& validation, const EkfParams& ekf) {
  if (policies.empty()) throw ConfigError("no candidate policies");
  if (validation.empty()) throw ConfigError("validation set is empty");
  SelectionResult r;
  for (const auto& p : policies) {
    double c;
    try {
      c = validation_cost(&p, validation, ekf);
    } catch (const NumericalError&) {
      c = std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(c)) c = std::numeric_limits<double>::infinity();
    r.costs.push_back(c);
  }
  r.index = static_cast<std::size_t>(std::min_element(r.costs.begin(), r.costs.end()) -
                                     r.costs.begin());
  return r;
}

ProtocolResult train_and_select(const CaseGenerator& cases, const EkfParams& ekf,
                                const TrainingConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.validation_episodes == 0) throw ConfigError("validation episode count must be positive");
  ProtocolResult out;
  const auto validation = make_cases(cases, config.validation_episodes, derive_seed(seed, 1));
  std::vector<CompensatorPolicy> policies;
  for (std::size_t i = 0; i < config.policy_count; ++i) {
    out.candidates.push_back(train(cases, ekf, config, derive_seed(seed, 100 + i)));
    policies.push_back(out.candidates.back().policy);
  }
  out.selection = select_policy(policies, validation, ekf);
  out.zero_policy_cost = validation_cost(nullptr, validation, ekf);
  return out;
}

std::vector<double> smooth(const std::vector<double>& xs, std::size_t window) {
  if (window == 0) throw ConfigError("smoothing window must be positive");
  std::vector<double> out(xs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= window) acc -= xs[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace rlcekf
