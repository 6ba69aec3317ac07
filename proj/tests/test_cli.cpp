#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rlcekf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" RLCEKF_CLI_PATH "' " + args +
                            " > '" + (dir_ / "stdout.txt").string() + "' 2> '" +
                            (dir_ / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const fs::path& p) const {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

  std::string stderr_text() const { return read(dir_ / "stderr.txt"); }
  std::string out(const std::string& sub = "out") const { return "--out-dir '" + (dir_ / sub).string() + "'"; }

  fs::path dir_;
};

TEST_F(Cli, HelpSucceeds) { EXPECT_EQ(run("--help"), 0); }

TEST_F(Cli, ConfigErrorsExitWithOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("evaluate --filters UKF " + out()), 1);
  EXPECT_NE(stderr_text().find("UKF"), std::string::npos);
  EXPECT_EQ(run("evaluate --scenario 7 " + out()), 1);
  EXPECT_EQ(run("evaluate --runs notanumber " + out()), 1);
  EXPECT_EQ(run("evaluate --filters RLC-EKF " + out()), 1);
  EXPECT_NE(stderr_text().find("--policy"), std::string::npos);
  EXPECT_EQ(run("evaluate --scenario real --filters EKF " + out()), 1);
  EXPECT_EQ(run("simulate --runs 1 " + out(), "RLC_EKF_SEED=abc"), 1);
}

TEST_F(Cli, DataErrorsExitWithTwo) {
  EXPECT_EQ(run("evaluate --filters RLC-EKF --policy '" + (dir_ / "missing.bin").string() + "' " + out()), 2);
  std::ofstream(dir_ / "bad.bin") << "not a policy";
  EXPECT_EQ(run("evaluate --filters RLC-EKF --policy '" + (dir_ / "bad.bin").string() + "' " + out()), 2);
  std::ofstream(dir_ / "bad.csv") << "t,gyro_x\n0,0\n";
  EXPECT_EQ(run("ingest --data '" + (dir_ / "bad.csv").string() + "' " + out()), 2);
  EXPECT_NE(stderr_text().find("mag_x"), std::string::npos);
}

TEST_F(Cli, NumericalFailureExitsWithThree) {
  std::ofstream f(dir_ / "overflow.csv");
  f << "t,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z,mag_x,mag_y,mag_z,qw,qx,qy,qz\n";
  for (int k = 0; k < 8; ++k) f << k * 0.01 << ",1e200,0,0,0,0,-1e200,1e200,0,0,1,0,0,0\n";
  f.close();
  EXPECT_EQ(run("evaluate --scenario real --filters EKF --runs 1 --data '" +
                (dir_ / "overflow.csv").string() + "' " + out()),
            3);
}

TEST_F(Cli, SeedPrecedence) {
  ASSERT_EQ(run("simulate --runs 1 --duration 0.5 " + out("a"), "RLC_EKF_SEED=5"), 0);
  ASSERT_EQ(run("simulate --runs 1 --duration 0.5 --seed 5 " + out("b")), 0);
  ASSERT_EQ(run("simulate --runs 1 --duration 0.5 --seed 6 " + out("c"), "RLC_EKF_SEED=5"), 0);
  ASSERT_EQ(run("simulate --runs 1 --duration 0.5 --seed 6 " + out("d")), 0);
  const auto ep = [&](const char* sub) { return read(dir_ / sub / "episodes" / "episode_0.csv"); };
  EXPECT_FALSE(ep("a").empty());
  EXPECT_EQ(ep("a"), ep("b"));
  EXPECT_EQ(ep("c"), ep("d"));
  EXPECT_NE(ep("a"), ep("c"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "initial_estimates.csv"));
}

TEST_F(Cli, ConfigFile) {
  std::ofstream(dir_ / "cfg.toml") << "seed = 5\nruns = 1\nduration = 0.5\n";
  ASSERT_EQ(run("simulate --config '" + (dir_ / "cfg.toml").string() + "' " + out("a")), 0);
  ASSERT_EQ(run("simulate --runs 1 --duration 0.5 --seed 5 " + out("b")), 0);
  EXPECT_EQ(read(dir_ / "a" / "episodes" / "episode_0.csv"), read(dir_ / "b" / "episodes" / "episode_0.csv"));
}

TEST_F(Cli, TrainThenEvaluate) {
  const std::string policy = (dir_ / "p.bin").string();
  ASSERT_EQ(run("train --policies 2 --phases 2 --episodes-per-phase 2 --gradient-steps 5 "
                "--batch-size 32 --validation-episodes 2 --train-duration 2 --policy '" +
                policy + "' " + out("train")),
            0)
      << stderr_text();
  EXPECT_TRUE(fs::exists(policy));
  EXPECT_TRUE(fs::exists(dir_ / "train" / "training_log.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "train" / "selection.csv"));
  ASSERT_EQ(run("evaluate --scenario 1 --runs 2 --duration 3 --policy '" + policy + "' " + out("eval")), 0)
      << stderr_text();
  for (const char* f : {"report.csv", "rmse.csv", "metrics.csv", "plot_report.py", "runs/run_1.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "eval" / f)) << f;
  }
  ASSERT_EQ(run("evaluate --scenario 1 --runs 2 --duration 3 --serial --policy '" + policy + "' " + out("serial")), 0);
  EXPECT_EQ(read(dir_ / "eval" / "report.csv"), read(dir_ / "serial" / "report.csv"));
}

TEST_F(Cli, IngestSplits) {
  ASSERT_EQ(run("simulate --runs 1 --duration 1 " + out("sim")), 0);
  ASSERT_EQ(run("ingest --data '" + (dir_ / "sim" / "episodes" / "episode_0.csv").string() + "' " + out("ing")), 0);
  EXPECT_TRUE(fs::exists(dir_ / "ing" / "train.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "ing" / "inference.csv"));
}

}  // namespace
