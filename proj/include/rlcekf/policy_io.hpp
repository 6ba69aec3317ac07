#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rlcekf/compensator.hpp"

namespace rlcekf {

/// Binary policy format:
///   "RLCEKF01"
///   header: int32 actor layer count, int32 sizes..., int32 critic layer
///           count, int32 sizes..., int32 innovation frame,
///           float64 u_max, float64 gamma
///   weights: float32, actor then critic then target critic, each layer W
///            row-major followed by b
///   uint32 CRC-32 of header + weights
/// All integers and floats little-endian.
inline constexpr char kPolicyMagic[] = "RLCEKF01";

std::vector<std::uint8_t> serialize_policy(const CompensatorPolicy& policy);
/// Throws DataError on bad magic, version mismatch, truncation, CRC mismatch
/// or non-finite weights.
CompensatorPolicy deserialize_policy(std::span<const std::uint8_t> bytes);

void save_policy(const CompensatorPolicy& policy, const std::filesystem::path& path);
CompensatorPolicy load_policy(const std::filesystem::path& path);

}  // namespace rlcekf
