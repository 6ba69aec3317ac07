#include "rlcekf/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "rlcekf/baselines.hpp"
#include "rlcekf/errors.hpp"
#include "rlcekf/metrics.hpp"
#include "rlcekf/parallel.hpp"

namespace rlcekf {

namespace {

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string full_precision(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open '" + p.string() + "' for writing");
  return f;
}

constexpr const char* kPlotScript = R"(#!/usr/bin/env python3
"""Plots mean +/- std Euler-angle errors from report.csv."""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
with open(here / "report.csv", newline="") as f:
    rows = list(csv.DictReader(f))
t = [float(r["t"]) for r in rows]
labels = sorted({k[: -len("_yaw_mean")] for k in rows[0] if k.endswith("_yaw_mean")})

fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 9))
for ax, angle in zip(axes, ("yaw", "pitch", "roll")):
    for label in labels:
        m = [float(r[f"{label}_{angle}_mean"]) for r in rows]
        s = [float(r[f"{label}_{angle}_std"]) for r in rows]
        ax.plot(t, m, label=label)
        ax.fill_between(t, [a - b for a, b in zip(m, s)], [a + b for a, b in zip(m, s)], alpha=0.2)
    ax.set_ylabel(f"{angle} error [rad]")
axes[0].legend(loc="upper right")
axes[-1].set_xlabel("time [s]")
fig.tight_layout()
fig.savefig(here / "report.png", dpi=150)
)";

}  // namespace

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::kEkf: return "EKF";
    case FilterKind::kCf: return "CF";
    case FilterKind::kGyro: return "GYRO";
    case FilterKind::kRlcEkf: return "RLC-EKF";
  }
  return "?";
}

FilterKind parse_filter_kind(const std::string& name) {
  const std::string u = upper(name);
  if (u == "EKF") return FilterKind::kEkf;
  if (u == "CF") return FilterKind::kCf;
  if (u == "GYRO") return FilterKind::kGyro;
  if (u == "RLC-EKF" || u == "RLCEKF" || u == "RLC") return FilterKind::kRlcEkf;
  throw ConfigError("unknown filter '" + name + "' (expected EKF, CF, GYRO or RLC-EKF)");
}

ScenarioId parse_scenario_id(const std::string& s) {
  const std::string u = upper(s);
  if (u == "1") return ScenarioId::kInitialError;
  if (u == "2") return ScenarioId::kFilterGain;
  if (u == "3") return ScenarioId::kNoiseModel;
  if (u == "REAL") return ScenarioId::kReal;
  throw ConfigError("unknown scenario '" + s + "' (expected 1, 2, 3 or real)");
}

std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::kInitialError: return "1";
    case ScenarioId::kFilterGain: return "2";
    case ScenarioId::kNoiseModel: return "3";
    case ScenarioId::kReal: return "real";
  }
  return "?";
}

void ScenarioSpec::validate() const {
  if (runs < 1) throw ConfigError("run count must be at least 1");
  if (filters.empty()) throw ConfigError("no filters requested");
  if (!(period > 0.0)) throw ConfigError("sample period must be positive");
  if (!(convergence_threshold > 0.0)) throw ConfigError("convergence threshold must be positive");
  for (double m : measurement_scales) {
    if (!(m > 0.0)) throw ConfigError("measurement multipliers must be positive");
  }
  for (double b : cf_betas) {
    if (!(b > 0.0)) throw ConfigError("CF gains must be positive");
  }
  if (id == ScenarioId::kFilterGain && (measurement_scales.empty() || cf_betas.empty())) {
    throw ConfigError("scenario 2 needs multipliers and CF gains");
  }
  noise.validate();
  if (id == ScenarioId::kReal) {
    if (!dataset) throw ConfigError("the real-data scenario needs a dataset");
    if (!dataset->has_truth()) throw DataError("the real-data scenario needs ground-truth columns");
  } else {
    if (!(effective_duration() >= 2.0 * period)) throw ConfigError("episode too short");
  }
  const double total =
      id == ScenarioId::kReal ? dataset->period * static_cast<double>(dataset->size() - 1)
                              : effective_duration();
  if (!(effective_window_start() <= total)) {
    throw ConfigError("steady-state window starts after the end of the episode");
  }
}

std::vector<FilterSpec> ScenarioSpec::expand() const {
  std::vector<FilterSpec> out;
  for (FilterKind k : filters) {
    const std::string name = to_string(k);
    if (id != ScenarioId::kFilterGain || k == FilterKind::kGyro) {
      out.push_back({k, name, 1.0, CfState::kDefaultBeta});
    } else if (k == FilterKind::kCf) {
      for (double b : cf_betas) out.push_back({k, name + "[beta=" + format_number(b) + "]", 1.0, b});
    } else {
      for (double m : measurement_scales) {
        out.push_back({k, name + "[x" + format_number(m) + "]", m, CfState::kDefaultBeta});
      }
    }
  }
  return out;
}

double ScenarioSpec::effective_duration() const {
  if (duration > 0.0) return duration;
  return id == ScenarioId::kFilterGain ? 60.0 : 20.0;
}

double ScenarioSpec::effective_window_start() const {
  if (window_start >= 0.0) return window_start;
  switch (id) {
    case ScenarioId::kFilterGain: return effective_duration() - 20.0;
    case ScenarioId::kReal: return 0.0;
    default: return effective_duration() / 2.0;
  }
}

EkfParams ScenarioSpec::ekf_params() const {
  EkfParams p = EkfParams::from_noise(noise, refs);
  p.jacobian = jacobian;
  return p;
}

EpisodeCase ScenarioSpec::make_case(std::size_t run) const {
  const std::uint64_t seed = derive_seed(seed_base, run);
  EpisodeCase c;
  if (id == ScenarioId::kReal) {
    c.episode = *dataset;
    c.initial_estimate = sample_initial_quaternion(derive_seed(seed, 1));
  } else {
    SimulationConfig sim;
    sim.profile = profile;
    sim.noise = noise;
    if (id == ScenarioId::kNoiseModel) sim.noise.gyro_bias = gyro_bias;
    sim.refs = refs;
    sim.period = period;
    sim.frames = static_cast<std::size_t>(std::llround(effective_duration() / period)) + 1;
    c = simulated_cases(sim)(seed);
  }
  if (exact_initial_estimate) c.initial_estimate = c.episode.truth.front();
  return c;
}

std::vector<UnitQuaternion> run_filter(const FilterSpec& filter, const EpisodeCase& ec,
                                       const EkfParams& params, const CompensatorPolicy* policy) {
  const auto& ep = ec.episode;
  std::vector<UnitQuaternion> est;
  est.reserve(ep.size());
  est.push_back(ec.initial_estimate);
  if (filter.kind == FilterKind::kRlcEkf && !policy) {
    throw ConfigError("RLC-EKF requested without a policy");
  }
  std::optional<RlcEkf> ekf;
  if (filter.kind == FilterKind::kEkf || filter.kind == FilterKind::kRlcEkf) {
    EkfParams p = params;
    p.acc_scale *= filter.measurement_scale;
    p.mag_scale *= filter.measurement_scale;
    ekf.emplace(p, filter.kind == FilterKind::kRlcEkf ? policy : nullptr, ec.initial_estimate);
  }
  // Configuration is checked above, so a non-finite quaternion below means
  // the recursion itself overflowed.
  try {
    switch (filter.kind) {
      case FilterKind::kEkf:
      case FilterKind::kRlcEkf: {
        for (std::size_t k = 1; k < ep.size(); ++k) {
          ekf->step(ep.frames[k - 1], ep.frames[k], ep.period);
          est.push_back(ekf->attitude());
        }
        break;
      }
      case FilterKind::kCf: {
        CfState s{ec.initial_estimate, filter.beta};
        for (std::size_t k = 1; k < ep.size(); ++k) {
          s = cf_step(s, ep.frames[k], ep.period, params.refs);
          est.push_back(s.q);
        }
        break;
      }
      case FilterKind::kGyro: {
        UnitQuaternion q = ec.initial_estimate;
        for (std::size_t k = 1; k < ep.size(); ++k) {
          q = gyro_integrate_step(q, ep.frames[k - 1].gyro, ep.period);
          est.push_back(q);
        }
        break;
      }
    }
  } catch (const ConfigError& e) {
    throw NumericalError(filter.label + " failed at frame " + std::to_string(est.size()) + ": " +
                         e.what());
  }
  return est;
}

namespace {

void evaluate_run(const ScenarioSpec& spec, const std::vector<FilterSpec>& filters,
                  const EkfParams& params, const CompensatorPolicy* policy, std::size_t window_begin,
                  std::size_t run, RunReport& report) {
  const EpisodeCase ec = spec.make_case(run);
  const auto& ep = ec.episode;
  for (std::size_t f = 0; f < filters.size(); ++f) {
    const auto est = run_filter(filters[f], ec, params, policy);
    RunSeries series;
    series.euler.reserve(est.size());
    series.total.reserve(est.size());
    std::vector<Vec3> rotvec;
    rotvec.reserve(est.size() - window_begin);
    for (std::size_t k = 0; k < est.size(); ++k) {
      series.euler.push_back(euler_error(ep.truth[k], est[k]));
      const Vec3 e = attitude_error(ep.truth[k], est[k]);
      series.total.push_back(e.norm());
      if (k >= window_begin) rotvec.push_back(e);
    }
    RunMetrics m;
    const std::span<const Vec3> ew(series.euler.data() + window_begin, est.size() - window_begin);
    const std::span<const double> tw(series.total.data() + window_begin, est.size() - window_begin);
    m.rmse = compute_rmse(ew);
    m.total_rmse = rms(tw);
    double mean = 0.0;
    for (double x : tw) mean += x;
    m.steady_mean_error = mean / static_cast<double>(tw.size());
    m.steady_variance = error_variance(rotvec);
    m.convergence_time = convergence_time(series.total, report.times, spec.convergence_threshold);
    report.filters[f].runs[run] = std::move(series);
    report.filters[f].metrics[run] = m;
  }
}

void aggregate(FilterReport& fr, std::size_t samples) {
  const std::size_t n = fr.runs.size();
  fr.mean.assign(samples, Vec3::Zero());
  fr.stddev.assign(samples, Vec3::Zero());
  for (std::size_t k = 0; k < samples; ++k) {
    Vec3 s = Vec3::Zero();
    for (const auto& r : fr.runs) s += r.euler[k];
    const Vec3 mean = s / static_cast<double>(n);
    Vec3 v = Vec3::Zero();
    if (n > 1) {
      for (const auto& r : fr.runs) v += (r.euler[k] - mean).cwiseAbs2();
      v /= static_cast<double>(n - 1);
    }
    fr.mean[k] = mean;
    fr.stddev[k] = v.cwiseSqrt();
  }
  std::vector<std::optional<double>> times;
  for (const auto& m : fr.metrics) {
    fr.mean_rmse += m.rmse;
    fr.mean_total_rmse += m.total_rmse;
    fr.mean_steady_error += m.steady_mean_error;
    fr.mean_steady_variance += m.steady_variance;
    times.push_back(m.convergence_time);
    if (m.convergence_time) ++fr.converged_runs;
  }
  const double dn = static_cast<double>(n);
  fr.mean_rmse /= dn;
  fr.mean_total_rmse /= dn;
  fr.mean_steady_error /= dn;
  fr.mean_steady_variance /= dn;
  fr.median_convergence_time = median_time(times);
}

}  // namespace

const FilterReport& RunReport::filter(const std::string& label) const {
  for (const auto& f : filters) {
    if (f.spec.label == label) return f;
  }
  throw ConfigError("no filter labelled '" + label + "' in report");
}

RunReport run_scenario(const ScenarioSpec& spec, const CompensatorPolicy* policy,
                       Execution execution) {
  spec.validate();
  const auto filters = spec.expand();
  for (const auto& f : filters) {
    if (f.kind == FilterKind::kRlcEkf && !policy) {
      throw ConfigError("RLC-EKF requested but no policy was provided");
    }
  }
  if (policy) policy->validate();
  const EkfParams params = spec.ekf_params();
  params.validate();

  RunReport report;
  std::size_t samples;
  double period;
  if (spec.id == ScenarioId::kReal) {
    samples = spec.dataset->size();
    period = spec.dataset->period;
  } else {
    samples = static_cast<std::size_t>(std::llround(spec.effective_duration() / spec.period)) + 1;
    period = spec.period;
  }
  report.times.resize(samples);
  for (std::size_t k = 0; k < samples; ++k) report.times[k] = static_cast<double>(k) * period;
  report.window_begin = std::min(
      samples - 1,
      static_cast<std::size_t>(std::ceil(spec.effective_window_start() / period - 1e-9)));

  for (const auto& f : filters) {
    FilterReport fr;
    fr.spec = f;
    fr.runs.resize(spec.runs);
    fr.metrics.resize(spec.runs);
    report.filters.push_back(std::move(fr));
  }

  parallel_for(
      spec.runs,
      [&](std::size_t r) {
        evaluate_run(spec, filters, params, policy, report.window_begin, r, report);
      },
      execution == Execution::kParallel);

  for (auto& fr : report.filters) aggregate(fr, samples);
  return report;
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "runs");
  const std::size_t samples = report.times.size();
  static constexpr const char* kAngles[] = {"yaw", "pitch", "roll"};

  {
    auto f = open_out(dir / "report.csv");
    std::string line = "t";
    for (const auto& fr : report.filters) {
      for (const char* a : kAngles) {
        line += "," + fr.spec.label + "_" + a + "_mean," + fr.spec.label + "_" + a + "_std";
      }
    }
    f << line << '\n';
    for (std::size_t k = 0; k < samples; ++k) {
      line = full_precision(report.times[k]);
      for (const auto& fr : report.filters) {
        for (int i = 0; i < 3; ++i) {
          line += "," + full_precision(fr.mean[k][i]) + "," + full_precision(fr.stddev[k][i]);
        }
      }
      f << line << '\n';
    }
  }

  const std::size_t runs = report.filters.empty() ? 0 : report.filters.front().runs.size();
  for (std::size_t r = 0; r < runs; ++r) {
    auto f = open_out(dir / "runs" / ("run_" + std::to_string(r) + ".csv"));
    std::string line = "t";
    for (const auto& fr : report.filters) {
      for (const char* a : kAngles) line += "," + fr.spec.label + "_" + a;
      line += "," + fr.spec.label + "_total";
    }
    f << line << '\n';
    for (std::size_t k = 0; k < samples; ++k) {
      line = full_precision(report.times[k]);
      for (const auto& fr : report.filters) {
        const auto& s = fr.runs[r];
        for (int i = 0; i < 3; ++i) line += "," + full_precision(s.euler[k][i]);
        line += "," + full_precision(s.total[k]);
      }
      f << line << '\n';
    }
  }

  auto time_str = [](const std::optional<double>& t) {
    return t ? full_precision(*t) : std::string("inf");
  };
  {
    auto f = open_out(dir / "rmse.csv");
    f << "filter,yaw_rmse,pitch_rmse,roll_rmse,total_rmse,steady_mean_error,steady_variance,"
         "median_convergence_time,converged_runs,runs\n";
    for (const auto& fr : report.filters) {
      f << fr.spec.label << ',' << full_precision(fr.mean_rmse[0]) << ','
        << full_precision(fr.mean_rmse[1]) << ',' << full_precision(fr.mean_rmse[2]) << ','
        << full_precision(fr.mean_total_rmse) << ',' << full_precision(fr.mean_steady_error) << ','
        << full_precision(fr.mean_steady_variance) << ','
        << (std::isinf(fr.median_convergence_time) ? std::string("inf")
                                                   : full_precision(fr.median_convergence_time))
        << ',' << fr.converged_runs << ',' << fr.runs.size() << '\n';
    }
  }
  {
    auto f = open_out(dir / "metrics.csv");
    f << "filter,run,yaw_rmse,pitch_rmse,roll_rmse,total_rmse,steady_mean_error,steady_variance,"
         "convergence_time\n";
    for (const auto& fr : report.filters) {
      for (std::size_t r = 0; r < fr.metrics.size(); ++r) {
        const auto& m = fr.metrics[r];
        f << fr.spec.label << ',' << r << ',' << full_precision(m.rmse[0]) << ','
          << full_precision(m.rmse[1]) << ',' << full_precision(m.rmse[2]) << ','
          << full_precision(m.total_rmse) << ',' << full_precision(m.steady_mean_error) << ','
          << full_precision(m.steady_variance) << ',' << time_str(m.convergence_time) << '\n';
      }
    }
  }
  {
    auto f = open_out(dir / "plot_report.py");
    f << kPlotScript;
  }
}

}  // namespace rlcekf
