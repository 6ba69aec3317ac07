#include "rlcekf/policy_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <zlib.h>

#include "rlcekf/errors.hpp"

namespace rlcekf {

namespace {

constexpr std::size_t kMagicSize = 8;
constexpr std::int32_t kMaxLayers = 64;
constexpr std::int32_t kMaxWidth = 1 << 16;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw DataError("policy file is truncated");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void write_sizes(Writer& w, const Mlp& net) {
  w.i32(static_cast<std::int32_t>(net.sizes().size()));
  for (int s : net.sizes()) w.i32(s);
}

std::vector<int> read_sizes(Reader& r) {
  const std::int32_t n = r.i32();
  if (n < 2 || n > kMaxLayers) throw DataError("policy file has an invalid layer count");
  std::vector<int> sizes;
  for (std::int32_t i = 0; i < n; ++i) {
    const std::int32_t s = r.i32();
    if (s <= 0 || s > kMaxWidth) throw DataError("policy file has an invalid layer size");
    sizes.push_back(s);
  }
  return sizes;
}

void write_weights(Writer& w, const Mlp& net) {
  for (const auto& l : net.layers()) {
    for (Eigen::Index i = 0; i < l.W.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.W.cols(); ++j) w.f32(l.W(i, j));
    }
    for (Eigen::Index i = 0; i < l.b.size(); ++i) w.f32(l.b[i]);
  }
}

void read_weights(Reader& r, Mlp& net) {
  for (auto& l : net.layers()) {
    for (Eigen::Index i = 0; i < l.W.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.W.cols(); ++j) l.W(i, j) = r.f32();
    }
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b[i] = r.f32();
  }
  if (!net.all_finite()) throw DataError("policy file contains non-finite weights");
}

std::uint32_t crc32_of(std::span<const std::uint8_t> data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> serialize_policy(const CompensatorPolicy& policy) {
  policy.validate();
  Writer w;
  write_sizes(w, policy.actor);
  write_sizes(w, policy.critic);
  w.i32(static_cast<std::int32_t>(policy.frame));
  w.f64(policy.u_max);
  w.f64(policy.gamma);
  write_weights(w, policy.actor);
  write_weights(w, policy.critic);
  write_weights(w, policy.target_critic);

  std::vector<std::uint8_t> out(kPolicyMagic, kPolicyMagic + kMagicSize);
  out.insert(out.end(), w.bytes().begin(), w.bytes().end());
  Writer crc;
  crc.u32(crc32_of(w.bytes()));
  out.insert(out.end(), crc.bytes().begin(), crc.bytes().end());
  return out;
}

CompensatorPolicy deserialize_policy(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagicSize) throw DataError("policy file is truncated");
  if (std::memcmp(bytes.data(), kPolicyMagic, kMagicSize - 2) != 0) {
    throw DataError("not a policy file (bad magic bytes)");
  }
  if (std::memcmp(bytes.data(), kPolicyMagic, kMagicSize) != 0) {
    throw DataError("unsupported policy file version '" +
                    std::string(reinterpret_cast<const char*>(bytes.data()) + kMagicSize - 2, 2) +
                    "'");
  }
  if (bytes.size() < kMagicSize + 4) throw DataError("policy file is truncated");
  const auto payload = bytes.subspan(kMagicSize, bytes.size() - kMagicSize - 4);

  Reader r(payload);
  const auto actor_sizes = read_sizes(r);
  const auto critic_sizes = read_sizes(r);
  const std::int32_t frame = r.i32();
  if (frame != 0 && frame != 1) throw DataError("policy file has an unknown innovation frame");
  CompensatorPolicy p;
  p.frame = static_cast<InnovationFrame>(frame);
  p.u_max = r.f64();
  p.gamma = r.f64();
  if (!std::isfinite(p.u_max) || !(p.u_max > 0.0) || !(p.gamma >= 0.0 && p.gamma < 1.0)) {
    throw DataError("policy file has an invalid header");
  }
  try {
    p.actor = Mlp(actor_sizes, Mlp::Output::kScaledTanh, static_cast<float>(p.u_max));
    p.critic = Mlp(critic_sizes, Mlp::Output::kLinear);
  } catch (const ConfigError& e) {
    throw DataError(std::string("policy file header: ") + e.what());
  }
  p.target_critic = p.critic;
  std::size_t expected = 4 * (p.actor.parameter_count() + 2 * p.critic.parameter_count());
  if (r.remaining() != expected) throw DataError("policy file is truncated or has trailing data");

  Reader crc_reader(bytes.subspan(bytes.size() - 4));
  if (crc_reader.u32() != crc32_of(payload)) throw DataError("policy file CRC mismatch");

  read_weights(r, p.actor);
  read_weights(r, p.critic);
  read_weights(r, p.target_critic);
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("policy file: ") + e.what());
  }
  return p;
}

void save_policy(const CompensatorPolicy& policy, const std::filesystem::path& path) {
  const auto bytes = serialize_policy(policy);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

CompensatorPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open policy file '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                        std::istreambuf_iterator<char>());
  return deserialize_policy(bytes);
}

}  // namespace rlcekf
