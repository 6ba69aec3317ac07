#pragma once

#include <filesystem>
#include <iosfwd>
#include <utility>

#include "rlcekf/imu_sim.hpp"

namespace rlcekf {

/// Shared simulated/recorded CSV schema:
///   t,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z,mag_x,mag_y,mag_z[,qw,qx,qy,qz]
/// Units: s, rad/s, normalized, normalized. Comma separator, '.' decimal
/// point, UTF-8, LF line endings.
void write_episode_csv(const EpisodeRecord& record, std::ostream& out);
void write_episode_csv(const EpisodeRecord& record, const std::filesystem::path& path);

/// Parses and validates a dataset: required columns present, finite values,
/// strictly increasing time, sample spacing within 1% of the mean period,
/// at least two frames. Errors are DataError with line numbers.
EpisodeRecord read_episode_csv(std::istream& in);
EpisodeRecord ingest_dataset(const std::filesystem::path& path);

/// First half for training, the rest for inference.
std::pair<EpisodeRecord, EpisodeRecord> split_dataset(const EpisodeRecord& record);

}  // namespace rlcekf
