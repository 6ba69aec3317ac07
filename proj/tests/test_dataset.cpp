#include <gtest/gtest.h>

#include <sstream>

#include "rlcekf/dataset.hpp"
#include "rlcekf/errors.hpp"

namespace rlcekf {
namespace {

EpisodeRecord sample_record(std::size_t frames) {
  SimulationConfig cfg;
  cfg.frames = frames;
  return simulate_episode(cfg, 77);
}

std::string data_error(const std::string& csv) {
  std::istringstream in(csv);
  try {
    read_episode_csv(in);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

const char* kHeader = "t,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z,mag_x,mag_y,mag_z\n";

TEST(Dataset, RoundTripIsExact) {
  const EpisodeRecord rec = sample_record(50);
  std::ostringstream out;
  write_episode_csv(rec, out);
  std::istringstream in(out.str());
  const EpisodeRecord back = read_episode_csv(in);
  EXPECT_EQ(back.frames, rec.frames);
  ASSERT_EQ(back.truth.size(), rec.truth.size());
  for (std::size_t k = 0; k < rec.truth.size(); ++k) {
    EXPECT_LT((back.truth[k].coeffs() - rec.truth[k].coeffs()).norm(), 1e-15);
  }
  EXPECT_NEAR(back.period, 0.01, 1e-12);
}

TEST(Dataset, WithoutTruth) {
  std::string csv = kHeader;
  csv += "0,0,0,0,0,0,-1,1,0,0\n0.01,0,0,0,0,0,-1,1,0,0\n";
  std::istringstream in(csv);
  const EpisodeRecord rec = read_episode_csv(in);
  EXPECT_FALSE(rec.has_truth());
  EXPECT_EQ(rec.size(), 2u);
}

TEST(Dataset, NamesMissingColumns) {
  const std::string msg = data_error("t,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z\n0,0,0,0,0,0,0\n");
  EXPECT_NE(msg.find("mag_x"), std::string::npos) << msg;
  EXPECT_NE(msg.find("mag_z"), std::string::npos) << msg;
  const std::string partial =
      data_error(std::string("t,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z,mag_x,mag_y,mag_z,qw\n"));
  EXPECT_NE(partial.find("qx"), std::string::npos) << partial;
}

TEST(Dataset, ReportsLineNumbers) {
  std::string csv = kHeader;
  csv += "0,0,0,0,0,0,-1,1,0,0\n0.01,0,0,0,0,0,-1,1,0,0\n0.005,0,0,0,0,0,-1,1,0,0\n";
  std::string msg = data_error(csv);
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("increasing"), std::string::npos) << msg;

  csv = kHeader;
  csv += "0,0,0,0,0,0,-1,1,0,0\n0.01,0,nan,0,0,0,-1,1,0,0\n";
  msg = data_error(csv);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;

  csv = kHeader;
  csv += "0,0,0,0,0,0,-1,1,0,0\n0.01,0,abc,0,0,0,-1,1,0,0\n";
  msg = data_error(csv);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;

  csv = kHeader;
  csv += "0,0,0,0,0,0,-1,1,0\n";
  msg = data_error(csv);
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(Dataset, SampleSpacingTolerance) {
  std::string ok = kHeader, bad = kHeader;
  ok += "0,0,0,0,0,0,-1,1,0,0\n0.01,0,0,0,0,0,-1,1,0,0\n0.02005,0,0,0,0,0,-1,1,0,0\n";
  bad += "0,0,0,0,0,0,-1,1,0,0\n0.01,0,0,0,0,0,-1,1,0,0\n0.0205,0,0,0,0,0,-1,1,0,0\n";
  EXPECT_EQ(data_error(ok), "");
  EXPECT_NE(data_error(bad).find("spacing"), std::string::npos);
}

TEST(Dataset, AcceptsByteOrderMarkAndCrlf) {
  std::string csv = "\xEF\xBB\xBF";
  csv += "t,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z,mag_x,mag_y,mag_z\r\n";
  csv += "0,0,0,0,0,0,-1,1,0,0\r\n0.01,0,0,0,0,0,-1,1,0,0\r\n";
  std::istringstream in(csv);
  EXPECT_EQ(read_episode_csv(in).size(), 2u);
}

TEST(Dataset, EmptyAndTooShort) {
  EXPECT_NE(data_error("").find("empty"), std::string::npos);
  EXPECT_NE(data_error(std::string(kHeader) + "0,0,0,0,0,0,-1,1,0,0\n").find("two"), std::string::npos);
}

TEST(Dataset, SplitsInHalf) {
  const EpisodeRecord rec = sample_record(10000);
  const auto [train, inference] = split_dataset(rec);
  EXPECT_EQ(train.size(), 5000u);
  EXPECT_EQ(inference.size(), 5000u);
  EXPECT_EQ(train.frames.front(), rec.frames.front());
  EXPECT_EQ(inference.frames.front(), rec.frames[5000]);
  EXPECT_EQ(inference.truth.back(), rec.truth.back());
}

}  // namespace
}  // namespace rlcekf
