#include <CLI11.hpp>

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rlcekf/dataset.hpp"
#include "rlcekf/errors.hpp"
#include "rlcekf/policy_io.hpp"
#include "rlcekf/scenario.hpp"
#include "rlcekf/training.hpp"

namespace fs = std::filesystem;
using namespace rlcekf;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string scenario = "1";
  std::vector<std::string> filters{"EKF", "CF", "RLC-EKF"};
  std::size_t runs = 50;
  std::uint64_t seed = 1;
  std::string policy;
  std::string out_dir = "out";
  std::string data;

  double duration = 0.0;
  double period = 0.01;
  double window_start = -1.0;
  double threshold = 0.1;
  std::vector<double> ekf_scales{1.0, 10.0, 100.0};
  std::vector<double> cf_betas{0.041, 0.081, 0.121, 0.41, 4.1};
  std::vector<double> bias{0.02, 0.02, 0.02};
  std::string jacobian = "rank-one";
  bool exact_init = false;
  bool serial = false;

  std::size_t policies = 20;
  std::size_t phases = 40;
  std::size_t episodes_per_phase = 4;
  std::size_t gradient_steps = 100;
  std::size_t batch_size = 256;
  std::size_t validation_episodes = 50;
  double gamma = 0.5;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  double train_scale = 1.0;
  double train_duration = 10.0;
  std::size_t window = 1000;
};

NormalizationJacobian parse_jacobian(const std::string& s) {
  if (s == "rank-one") return NormalizationJacobian::kRankOne;
  if (s == "projector") return NormalizationJacobian::kProjector;
  throw ConfigError("unknown jacobian '" + s + "' (expected rank-one or projector)");
}

bool seed_on_command_line(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view a = argv[i];
    if (a == "--seed" || a.starts_with("--seed=")) return true;
  }
  return false;
}

void apply_seed_env(Options& o, bool from_flag) {
  if (from_flag) return;
  const char* env = std::getenv("RLC_EKF_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-') {
    throw ConfigError(std::string("RLC_EKF_SEED is not a non-negative integer: '") + env + "'");
  }
  o.seed = v;
}

EpisodeRecord inference_half(const std::string& path) {
  if (path.empty()) throw ConfigError("--data is required for the real-data scenario");
  return split_dataset(ingest_dataset(path)).second;
}

ScenarioSpec build_spec(const Options& o) {
  ScenarioSpec s;
  s.id = parse_scenario_id(o.scenario);
  s.filters.clear();
  for (const auto& f : o.filters) s.filters.push_back(parse_filter_kind(f));
  s.runs = o.runs;
  s.seed_base = o.seed;
  s.duration = o.duration;
  s.period = o.period;
  s.window_start = o.window_start;
  s.convergence_threshold = o.threshold;
  s.measurement_scales = o.ekf_scales;
  s.cf_betas = o.cf_betas;
  if (o.bias.size() != 3) throw ConfigError("--bias needs three components");
  s.gyro_bias = Vec3(o.bias[0], o.bias[1], o.bias[2]);
  s.exact_initial_estimate = o.exact_init;
  s.jacobian = parse_jacobian(o.jacobian);
  if (s.id == ScenarioId::kReal) s.dataset = inference_half(o.data);
  return s;
}

bool needs_policy(const ScenarioSpec& s) {
  for (auto k : s.filters) {
    if (k == FilterKind::kRlcEkf) return true;
  }
  return false;
}

int cmd_simulate(const Options& o) {
  ScenarioSpec spec = build_spec(o);
  if (spec.id == ScenarioId::kReal) throw ConfigError("simulate supports scenarios 1, 2 and 3");
  spec.filters = {FilterKind::kEkf};
  spec.validate();
  const fs::path dir = fs::path(o.out_dir) / "episodes";
  fs::create_directories(dir);
  std::ofstream init(fs::path(o.out_dir) / "initial_estimates.csv");
  if (!init) throw ConfigError("cannot write to '" + o.out_dir + "'");
  init << "run,qw,qx,qy,qz\n";
  for (std::size_t r = 0; r < spec.runs; ++r) {
    const EpisodeCase c = spec.make_case(r);
    write_episode_csv(c.episode, dir / ("episode_" + std::to_string(r) + ".csv"));
    const Vec4 q = c.initial_estimate.coeffs();
    char line[160];
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g\n", r, q[0], q[1], q[2], q[3]);
    init << line;
  }
  std::cout << "wrote " << spec.runs << " episodes to " << dir.string() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  TrainingConfig cfg;
  cfg.policy_count = o.policies;
  cfg.phases = o.phases;
  cfg.episodes_per_phase = o.episodes_per_phase;
  cfg.gradient_steps_per_phase = o.gradient_steps;
  cfg.batch_size = o.batch_size;
  cfg.validation_episodes = o.validation_episodes;
  cfg.gamma = o.gamma;
  cfg.actor_lr = o.actor_lr;
  cfg.critic_lr = o.critic_lr;

  SimulationConfig sim;
  sim.period = o.period;
  EkfParams ekf = EkfParams::from_noise(sim.noise, sim.refs);
  ekf.jacobian = parse_jacobian(o.jacobian);
  if (!(o.train_scale > 0.0)) throw ConfigError("--train-scale must be positive");
  ekf.acc_scale = ekf.mag_scale = o.train_scale;

  CaseGenerator cases;
  if (!o.data.empty()) {
    const EpisodeRecord first = split_dataset(ingest_dataset(o.data)).first;
    cases = dataset_window_cases(first, o.window);
  } else {
    if (!(o.train_duration > 0.0)) throw ConfigError("--train-duration must be positive");
    sim.frames = static_cast<std::size_t>(std::llround(o.train_duration / o.period)) + 1;
    cases = simulated_cases(sim);
  }

  const ProtocolResult res = train_and_select(cases, ekf, cfg, o.seed);
  fs::create_directories(o.out_dir);
  const fs::path policy_path = o.policy.empty() ? fs::path(o.out_dir) / "policy.bin" : fs::path(o.policy);
  save_policy(res.selected(), policy_path);

  std::ofstream log(fs::path(o.out_dir) / "training_log.csv");
  log << "candidate,episode,cost,smoothed_cost\n";
  for (std::size_t i = 0; i < res.candidates.size(); ++i) {
    const auto& costs = res.candidates[i].episode_costs;
    const auto sm = smooth(costs, 20);
    for (std::size_t e = 0; e < costs.size(); ++e) {
      char line[128];
      std::snprintf(line, sizeof line, "%zu,%zu,%.17g,%.17g\n", i, e, costs[e], sm[e]);
      log << line;
    }
  }
  std::ofstream sel(fs::path(o.out_dir) / "selection.csv");
  sel << "candidate,validation_cost,selected\n";
  for (std::size_t i = 0; i < res.selection.costs.size(); ++i) {
    sel << i << ',' << res.selection.costs[i] << ',' << (i == res.selection.index ? 1 : 0) << '\n';
  }
  std::cout << "selected candidate " << res.selection.index << " validation cost "
            << res.selection.costs[res.selection.index] << " (uncompensated EKF "
            << res.zero_policy_cost << ")\npolicy written to " << policy_path.string() << '\n';
  return 0;
}

int cmd_evaluate(const Options& o) {
  const ScenarioSpec spec = build_spec(o);
  std::optional<CompensatorPolicy> policy;
  if (needs_policy(spec)) {
    if (o.policy.empty()) throw ConfigError("--policy is required when RLC-EKF is evaluated");
    policy = load_policy(o.policy);
  }
  const RunReport report = run_scenario(spec, policy ? &*policy : nullptr,
                                        o.serial ? Execution::kSerial : Execution::kParallel);
  write_report(report, o.out_dir);
  std::printf("%-22s %10s %10s %10s %12s %14s\n", "filter", "yaw_rmse", "pitch_rmse", "roll_rmse",
              "steady_var", "median_t_conv");
  for (const auto& f : report.filters) {
    std::printf("%-22s %10.4f %10.4f %10.4f %12.3e %14.2f\n", f.spec.label.c_str(), f.mean_rmse[0],
                f.mean_rmse[1], f.mean_rmse[2], f.mean_steady_variance,
                f.median_convergence_time);
  }
  std::cout << "report written to " << o.out_dir << '\n';
  return 0;
}

int cmd_ingest(const Options& o) {
  if (o.data.empty()) throw ConfigError("--data is required");
  const EpisodeRecord rec = ingest_dataset(o.data);
  const auto [train, infer] = split_dataset(rec);
  fs::create_directories(o.out_dir);
  write_episode_csv(train, fs::path(o.out_dir) / "train.csv");
  write_episode_csv(infer, fs::path(o.out_dir) / "inference.csv");
  std::cout << rec.size() << " frames, period " << rec.period << " s, ground truth "
            << (rec.has_truth() ? "present" : "absent") << "; split " << train.size() << " / "
            << infer.size() << " frames into " << o.out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attitude estimation with a learned EKF compensator"};
  app.set_config("--config", "", "TOML configuration file mirroring the command-line flags");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--scenario", o.scenario, "Scenario: 1, 2, 3 or real")->capture_default_str();
  app.add_option("--filters", o.filters, "Filters: EKF, CF, GYRO, RLC-EKF")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--runs", o.runs, "Independent runs")->capture_default_str();
  app.add_option("--seed", o.seed, "Seed base (RLC_EKF_SEED overrides the config file)")
      ->capture_default_str();
  app.add_option("--policy", o.policy, "Policy file (read by evaluate, written by train)");
  app.add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
  app.add_option("--data", o.data, "Recorded dataset CSV");
  app.add_option("--duration", o.duration, "Episode length in s (0 = scenario default)");
  app.add_option("--period", o.period, "Sample period in s")->capture_default_str();
  app.add_option("--window-start", o.window_start,
                 "Start of the steady-state window in s (negative = scenario default)");
  app.add_option("--threshold", o.threshold, "Convergence threshold in rad")->capture_default_str();
  app.add_option("--ekf-scales", o.ekf_scales, "Scenario 2 EKF measurement-covariance multipliers")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--cf-betas", o.cf_betas, "Scenario 2 CF gains")->delimiter(',')->capture_default_str();
  app.add_option("--bias", o.bias, "Scenario 3 gyro bias in rad/s")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  app.add_option("--jacobian", o.jacobian, "Normalization Jacobian: rank-one or projector")
      ->capture_default_str();
  app.add_flag("--exact-init", o.exact_init, "Start every filter at the true attitude");
  app.add_flag("--serial", o.serial, "Run the serial reference path");
  app.add_option("--policies", o.policies, "Candidate policies to train")->capture_default_str();
  app.add_option("--phases", o.phases, "Training phases per candidate")->capture_default_str();
  app.add_option("--episodes-per-phase", o.episodes_per_phase, "Rollouts per phase")
      ->capture_default_str();
  app.add_option("--gradient-steps", o.gradient_steps, "Gradient steps per phase")
      ->capture_default_str();
  app.add_option("--batch-size", o.batch_size, "Minibatch size")->capture_default_str();
  app.add_option("--validation-episodes", o.validation_episodes, "Episodes for policy selection")
      ->capture_default_str();
  app.add_option("--gamma", o.gamma, "Discount factor")->capture_default_str();
  app.add_option("--actor-lr", o.actor_lr, "Actor learning rate")->capture_default_str();
  app.add_option("--critic-lr", o.critic_lr, "Critic learning rate")->capture_default_str();
  app.add_option("--train-scale", o.train_scale,
                 "Measurement-covariance multiplier of the EKF used in training")
      ->capture_default_str();
  app.add_option("--train-duration", o.train_duration, "Simulated training episode length in s")
      ->capture_default_str();
  app.add_option("--window", o.window, "Frames per training window on recorded data")
      ->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Write simulated episodes as CSV");
  auto* train = app.add_subcommand("train", "Train candidate policies and keep the best");
  auto* evaluate = app.add_subcommand("evaluate", "Run a scenario and write the report");
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset and split it in halves");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    apply_seed_env(o, seed_on_command_line(argc, argv));
    if (simulate->parsed()) return cmd_simulate(o);
    if (train->parsed()) return cmd_train(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (ingest->parsed()) return cmd_ingest(o);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
