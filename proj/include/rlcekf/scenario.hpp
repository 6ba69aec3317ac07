#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rlcekf/compensator.hpp"
#include "rlcekf/ekf.hpp"
#include "rlcekf/imu_sim.hpp"
#include "rlcekf/training.hpp"

namespace rlcekf {

enum class FilterKind { kEkf, kCf, kGyro, kRlcEkf };

/// "EKF", "CF", "GYRO", "RLC-EKF".
std::string to_string(FilterKind kind);
/// Case-insensitive inverse of to_string. Throws ConfigError.
FilterKind parse_filter_kind(const std::string& name);

/// One concrete filter configuration within a scenario.
struct FilterSpec {
  FilterKind kind = FilterKind::kEkf;
  std::string label;
  /// EKF measurement-covariance multiplier (accelerometer and magnetometer).
  double measurement_scale = 1.0;
  double beta = 0.041;
};

enum class ScenarioId { kInitialError = 1, kFilterGain = 2, kNoiseModel = 3, kReal = 4 };

/// "1", "2", "3", "real".
ScenarioId parse_scenario_id(const std::string& s);
std::string to_string(ScenarioId id);

struct ScenarioSpec {
  ScenarioId id = ScenarioId::kInitialError;
  std::vector<FilterKind> filters{FilterKind::kEkf, FilterKind::kCf, FilterKind::kRlcEkf};
  std::size_t runs = 50;
  std::uint64_t seed_base = 1;

  /// Episode length in seconds; <= 0 selects the scenario default
  /// (20 s, 60 s, 20 s for scenarios 1-3).
  double duration = 0.0;
  double period = 0.01;
  /// Start of the steady-state / RMSE window in seconds from the first
  /// frame; < 0 selects the default (10 s, 40 s, 10 s; 0 for real data).
  double window_start = -1.0;
  double convergence_threshold = 0.1;

  /// Scenario 2 sweeps.
  std::vector<double> measurement_scales{1.0, 10.0, 100.0};
  std::vector<double> cf_betas{0.041, 0.081, 0.121, 0.41, 4.1};
  /// Scenario 3 gyro bias (rad/s).
  Vec3 gyro_bias = Vec3::Constant(0.02);

  bool exact_initial_estimate = false;
  NormalizationJacobian jacobian = NormalizationJacobian::kRankOne;
  NoiseModel noise = NoiseModel::paper_training();
  ReferenceVectors refs;
  AngularVelocityProfile profile = AngularVelocityProfile::evaluation();
  /// Recorded trajectory for the real-data scenario (inference part).
  std::optional<EpisodeRecord> dataset;

  void validate() const;
  std::vector<FilterSpec> expand() const;
  double effective_duration() const;
  double effective_window_start() const;
  /// Episode (and starting estimate) of run k; identical for every filter.
  EpisodeCase make_case(std::size_t run) const;
  EkfParams ekf_params() const;
};

struct RunSeries {
  std::vector<Vec3> euler;     // wrapped (yaw, pitch, roll) errors
  std::vector<double> total;   // attitude error angle
};

struct RunMetrics {
  Vec3 rmse = Vec3::Zero();         // per-angle, steady window
  double total_rmse = 0.0;          // attitude error angle, steady window
  double steady_mean_error = 0.0;   // mean attitude error angle, steady window
  double steady_variance = 0.0;     // error_variance of rotation-vector errors
  std::optional<double> convergence_time;
};

struct FilterReport {
  FilterSpec spec;
  std::vector<RunSeries> runs;
  std::vector<RunMetrics> metrics;
  std::vector<Vec3> mean;   // across runs, per sample
  std::vector<Vec3> stddev; // sample standard deviation across runs
  Vec3 mean_rmse = Vec3::Zero();
  double mean_total_rmse = 0.0;
  double mean_steady_error = 0.0;
  double mean_steady_variance = 0.0;
  double median_convergence_time = 0.0;  // +inf when most runs never converge
  std::size_t converged_runs = 0;
};

struct RunReport {
  std::vector<double> times;
  std::size_t window_begin = 0;
  std::vector<FilterReport> filters;

  const FilterReport& filter(const std::string& label) const;
};

enum class Execution { kSerial, kParallel };

/// Runs every filter on identical per-run episodes and aggregates. The
/// parallel path distributes runs over OpenMP threads and produces results
/// bit-identical to the serial reference.
RunReport run_scenario(const ScenarioSpec& spec, const CompensatorPolicy* policy,
                       Execution execution = Execution::kParallel);

/// Estimates of a single filter over one episode.
std::vector<UnitQuaternion> run_filter(const FilterSpec& filter, const EpisodeCase& ec,
                                       const EkfParams& params, const CompensatorPolicy* policy);

/// Writes report.csv, rmse.csv, metrics.csv, runs/run_<k>.csv and
/// plot_report.py into `dir`.
void write_report(const RunReport& report, const std::filesystem::path& dir);

}  // namespace rlcekf
