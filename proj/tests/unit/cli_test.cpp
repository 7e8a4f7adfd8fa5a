#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "condcov");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = condcov::cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const std::string kData = std::string(CONDCOV_SOURCE_DIR) + "/data/kw51_synthetic.csv";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("condcov_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::filesystem::path dir_;
};

}  // namespace

TEST(Cli, UnknownFlagPrintsUsage) {
  const auto r = run({"fit", "--no-such-flag"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("category=Usage"), std::string::npos);
  EXPECT_NE(r.err.find("--method"), std::string::npos);
}

TEST(Cli, MissingSubcommand) {
  const auto r = run({});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, HelpSucceeds) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("select-bandwidth"), std::string::npos);
}

TEST(Cli, LibraryErrorsCarryCategory) {
  const auto r = run({"inspect", "--input", "/nonexistent.csv", "--covariates", "a", "--outputs", "b"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error: category=IoError message="), std::string::npos);
  const auto m = run({"fit", "--input", kData, "--covariates", "tBD31A", "--outputs", "mode3", "--method", "svm",
                      "--out", "/tmp/x"});
  EXPECT_NE(m.err.find("category=InvalidArgument"), std::string::npos);
}

TEST_F(CliTest, InspectPrintsGapReport) {
  const auto r = run({"inspect", "--input", kData, "--covariates", "tBD31A,rhBD31A", "--outputs", "mode3,mode7",
                      "--start", "2018-10-02", "--end", "2019-05-15"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rows kept"), std::string::npos);
  EXPECT_NE(r.out.find("mode7"), std::string::npos);
  EXPECT_NE(r.out.find("dropped leading:      2"), std::string::npos) << r.out;
}

TEST_F(CliTest, FitWritesGridAndManifest) {
  const auto out = path("nw");
  const auto r = run({"fit", "--method", "nw", "--bandwidth", "5", "--input", kData, "--covariates",
                      "tBD31A,rhBD31A", "--outputs", "mode3,mode5,mode6", "--end", "2018-11-01",
                      "--grid-points", "10", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(out + "/grid.csv"));
  EXPECT_TRUE(std::filesystem::exists(out + "/grid.meta.json"));
  EXPECT_TRUE(std::filesystem::exists(out + "/manifest.json"));
  std::ifstream in(out + "/grid.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_NE(header.find("corr_mode5_mode6"), std::string::npos);
}

TEST_F(CliTest, SelectBandwidthPrintsBothLosses) {
  const auto r = run({"select-bandwidth", "--input", kData, "--covariates", "tBD31A,rhBD31A", "--outputs",
                      "mode3,mode5", "--end", "2018-10-20", "--rule", "MinimizerOfGeomMeanLoss"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("frobenius"), std::string::npos);
  EXPECT_NE(r.out.find("trace"), std::string::npos);
  EXPECT_NE(r.out.find("rule MinimizerOfGeomMeanLoss"), std::string::npos);
  std::size_t lines = 0;
  std::istringstream ss(r.out);
  for (std::string line; std::getline(ss, line);) lines += !line.empty() && std::isdigit(line[0]);
  EXPECT_EQ(lines, 25u);
}

TEST_F(CliTest, SimulateWritesTables) {
  const auto cfg = path("sim.json");
  std::ofstream(cfg) << R"({"format": "condcov-sim-config", "version": 1, "n_hours": 480, "qs": [2],
                            "replications": 2, "forest": {"n_trees": 4}})";
  const auto out = path("sim");
  const auto r = run({"--threads", "1", "simulate", "--config", cfg, "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(out + "/results.csv"));
  EXPECT_TRUE(std::filesystem::exists(out + "/summary.json"));
  EXPECT_NE(r.out.find("forest"), std::string::npos);
}
