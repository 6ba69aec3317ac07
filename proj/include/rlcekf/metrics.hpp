#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rlcekf/rotation.hpp"

namespace rlcekf {

/// Per-angle (yaw, pitch, roll) error, truth minus estimate, wrapped to (-pi, pi].
Vec3 euler_error(const UnitQuaternion& truth, const UnitQuaternion& estimate);

/// Total attitude error angle |log(truth ⊗ estimate*)| in [0, pi].
double total_error(const UnitQuaternion& truth, const UnitQuaternion& estimate);

/// Per-angle RMSE of raw Euler-angle errors; every sample is wrapped first.
/// Throws ConfigError on an empty window.
Vec3 compute_rmse(std::span<const Vec3> errors);

double rms(std::span<const double> xs);

/// First time after which `errors` stays strictly below `threshold`;
/// nullopt when the final sample is not below it.
std::optional<double> convergence_time(std::span<const double> errors,
                                       std::span<const double> times, double threshold);

/// Median with missing values ordered as +infinity.
double median_time(std::vector<std::optional<double>> times);

/// Trace of the sample covariance of rotation-vector errors.
double error_variance(std::span<const Vec3> errors);

}  // namespace rlcekf
