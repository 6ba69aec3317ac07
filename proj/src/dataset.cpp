#include "rlcekf/dataset.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rlcekf/errors.hpp"

namespace rlcekf {

namespace {

constexpr std::array<const char*, 10> kRequired = {"t",     "gyro_x", "gyro_y", "gyro_z", "acc_x",
                                                   "acc_y", "acc_z",  "mag_x",  "mag_y",  "mag_z"};
constexpr std::array<const char*, 4> kTruth = {"qw", "qx", "qy", "qz"};

void append_number(std::string& line, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  line.append(buf, static_cast<std::size_t>(n));
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(',', start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError("line " + std::to_string(line) + ": cannot parse '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) throw DataError("line " + std::to_string(line) + ": non-finite value");
  return v;
}

}  // namespace

void write_episode_csv(const EpisodeRecord& record, std::ostream& out) {
  const bool truth = record.has_truth();
  if (truth && record.truth.size() != record.frames.size()) {
    throw ConfigError("truth and frame counts differ");
  }
  std::string line;
  for (std::size_t i = 0; i < kRequired.size(); ++i) {
    if (i) line += ',';
    line += kRequired[i];
  }
  if (truth) line += ",qw,qx,qy,qz";
  line += '\n';
  out << line;
  for (std::size_t k = 0; k < record.frames.size(); ++k) {
    const auto& f = record.frames[k];
    line.clear();
    append_number(line, f.t);
    for (const Vec3* v : {&f.gyro, &f.acc, &f.mag}) {
      for (int i = 0; i < 3; ++i) {
        line += ',';
        append_number(line, (*v)[i]);
      }
    }
    if (truth) {
      for (int i = 0; i < 4; ++i) {
        line += ',';
        append_number(line, record.truth[k].coeffs()[i]);
      }
    }
    line += '\n';
    out << line;
  }
}

void write_episode_csv(const EpisodeRecord& record, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open '" + path.string() + "' for writing");
  write_episode_csv(record, f);
}

EpisodeRecord read_episode_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw DataError("dataset is empty");
  if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);
  const auto names = split(trim(header));

  auto find = [&](const char* name) -> int {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (trim(names[i]) == name) return static_cast<int>(i);
    }
    return -1;
  };
  std::array<int, 10> req{};
  std::string missing;
  for (std::size_t i = 0; i < kRequired.size(); ++i) {
    req[i] = find(kRequired[i]);
    if (req[i] < 0) missing += (missing.empty() ? "" : ", ") + std::string(kRequired[i]);
  }
  if (!missing.empty()) throw DataError("dataset is missing columns: " + missing);

  std::array<int, 4> tq{};
  int truth_found = 0;
  std::string truth_missing;
  for (std::size_t i = 0; i < kTruth.size(); ++i) {
    tq[i] = find(kTruth[i]);
    if (tq[i] >= 0) {
      ++truth_found;
    } else {
      truth_missing += (truth_missing.empty() ? "" : ", ") + std::string(kTruth[i]);
    }
  }
  if (truth_found != 0 && truth_found != 4) {
    throw DataError("dataset has partial ground truth; missing columns: " + truth_missing);
  }
  const bool truth = truth_found == 4;

  EpisodeRecord rec;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split(body);
    if (fields.size() != names.size()) {
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(names.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    std::array<double, 10> v{};
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = parse_number(fields[static_cast<std::size_t>(req[i])], lineno);
    MeasurementFrame f;
    f.t = v[0];
    f.gyro = Vec3(v[1], v[2], v[3]);
    f.acc = Vec3(v[4], v[5], v[6]);
    f.mag = Vec3(v[7], v[8], v[9]);
    if (!rec.frames.empty() && !(f.t > rec.frames.back().t)) {
      throw DataError("line " + std::to_string(lineno) + ": timestamps are not strictly increasing");
    }
    rec.frames.push_back(f);
    if (truth) {
      Vec4 q;
      for (int i = 0; i < 4; ++i) q[i] = parse_number(fields[static_cast<std::size_t>(tq[static_cast<std::size_t>(i)])], lineno);
      if (q.norm() < 1e-6) {
        throw DataError("line " + std::to_string(lineno) + ": ground-truth quaternion is zero");
      }
      rec.truth.push_back(UnitQuaternion::from_unit_coeffs(q));
    }
  }
  if (rec.frames.size() < 2) throw DataError("dataset needs at least two frames");

  const double span = rec.frames.back().t - rec.frames.front().t;
  rec.period = span / static_cast<double>(rec.frames.size() - 1);
  for (std::size_t k = 1; k < rec.frames.size(); ++k) {
    const double dt = rec.frames[k].t - rec.frames[k - 1].t;
    if (std::abs(dt - rec.period) > 0.01 * rec.period) {
      throw DataError("line " + std::to_string(k + 2) + ": sample spacing deviates more than 1% " +
                      "from the mean period");
    }
  }
  return rec;
}

EpisodeRecord ingest_dataset(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open dataset '" + path.string() + "'");
  return read_episode_csv(f);
}

std::pair<EpisodeRecord, EpisodeRecord> split_dataset(const EpisodeRecord& record) {
  const std::size_t half = record.size() / 2;
  if (half < 2 || record.size() - half < 2) throw DataError("dataset too short to split");
  return {record.slice(0, half), record.slice(half, record.size() - half)};
}

}  // namespace rlcekf
