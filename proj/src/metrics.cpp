#include "rlcekf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rlcekf/errors.hpp"

namespace rlcekf {

Vec3 euler_error(const UnitQuaternion& truth, const UnitQuaternion& estimate) {
  const Vec3 d = to_euler(truth).as_vector() - to_euler(estimate).as_vector();
  return {wrap_angle(d[0]), wrap_angle(d[1]), wrap_angle(d[2])};
}

double total_error(const UnitQuaternion& truth, const UnitQuaternion& estimate) {
  return attitude_error(truth, estimate).norm();
}

Vec3 compute_rmse(std::span<const Vec3> errors) {
  if (errors.empty()) throw ConfigError("RMSE window is empty");
  Vec3 acc = Vec3::Zero();
  for (const auto& e : errors) {
    for (int i = 0; i < 3; ++i) {
      const double w = wrap_angle(e[i]);
      acc[i] += w * w;
    }
  }
  return (acc / static_cast<double>(errors.size())).cwiseSqrt();
}

double rms(std::span<const double> xs) {
  if (xs.empty()) throw ConfigError("RMS window is empty");
  double acc = 0.0;
  for (double x : xs) acc += x * x;
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

std::optional<double> convergence_time(std::span<const double> errors,
                                       std::span<const double> times, double threshold) {
  if (errors.size() != times.size()) throw ConfigError("error and time series differ in length");
  std::optional<double> t;
  for (std::size_t i = errors.size(); i-- > 0;) {
    if (!(errors[i] < threshold)) break;
    t = times[i];
  }
  return t;
}

double median_time(std::vector<std::optional<double>> times) {
  if (times.empty()) throw ConfigError("median of an empty set");
  std::vector<double> v;
  v.reserve(times.size());
  for (const auto& t : times) v.push_back(t ? *t : std::numeric_limits<double>::infinity());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  const double a = v[n / 2 - 1], b = v[n / 2];
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) ? a : b;
  return 0.5 * (a + b);
}

double error_variance(std::span<const Vec3> errors) {
  if (errors.size() < 2) return 0.0;
  Vec3 mean = Vec3::Zero();
  for (const auto& e : errors) mean += e;
  mean /= static_cast<double>(errors.size());
  double acc = 0.0;
  for (const auto& e : errors) acc += (e - mean).squaredNorm();
  return acc / static_cast<double>(errors.size() - 1);
}

}  // namespace rlcekf
