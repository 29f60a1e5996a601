#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "drpn/checkpoint.hpp"
#include "drpn/toynet.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const fs::path out_path = fs::temp_directory_path() / "drpn_cli_test_output.txt";
  const std::string cmd =
      std::string("\"") + DRPN_CLI_PATH + "\" " + args + " > " + out_path.string() + " 2>&1";
  const int status = std::system(cmd.c_str());

  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  return r;
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST(Cli, VerifyPasses) {
  const RunResult r = run_cli("verify --seed 42");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("all"), std::string::npos);
  EXPECT_NE(r.output.find("passed"), std::string::npos);
  EXPECT_EQ(r.output.find("[FAIL]"), std::string::npos);
}

TEST(Cli, UnknownSubcommandExitsTwo) {
  EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
  EXPECT_EQ(run_cli("").exit_code, 2);
}

TEST(Cli, VerifyIsDeterministicUnderSeed) {
  const RunResult a = run_cli("verify --seed 7");
  const RunResult b = run_cli("verify --seed 7");
  EXPECT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.output, b.output);
}

TEST(Cli, StatsOnFixture) {
  const fs::path dir = fs::temp_directory_path();
  const fs::path ann = dir / "drpn_cli_test_ann.json";
  const fs::path csv = dir / "drpn_cli_test_ratios.csv";
  {
    std::ofstream out(ann);
    out << R"([{"image_width": 300, "image_height": 300,
                "boxes": [[10, 20, 9, 5], [2, 4, 296, 292]]}])";
  }
  const RunResult r =
      run_cli("stats --annotations " + ann.string() + " --out " + csv.string());
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("0.05%"), std::string::npos);
  EXPECT_EQ(count_lines(csv), 3);  // header + 2 boxes
}

TEST(Cli, StatsOnMissingFileFails) {
  EXPECT_EQ(run_cli("stats --annotations /nonexistent/f.json").exit_code, 1);
}

TEST(Cli, TrainProbePipeline) {
  const fs::path dir = fs::temp_directory_path();
  const fs::path ckpt = dir / "drpn_cli_test.ckpt";
  const fs::path csv = dir / "drpn_cli_test_probe.csv";

  const RunResult train = run_cli("train-toy --epochs 1 --samples 48 --seed 7 --out " +
                                  ckpt.string());
  EXPECT_EQ(train.exit_code, 0) << train.output;
  EXPECT_TRUE(fs::exists(ckpt));
  EXPECT_NE(train.output.find("train accuracy"), std::string::npos);

  const RunResult probe =
      run_cli("probe --ckpt " + ckpt.string() + " --frames 5 --out " + csv.string());
  EXPECT_EQ(probe.exit_code, 0) << probe.output;
  EXPECT_EQ(count_lines(csv), 6);  // header + 5 frames
  {
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "s,w_3x3,w_1x3,w_3x1,w_1x1,w_shortcut");
  }
}

TEST(Cli, ProbeUniformForZeroInitGenerators) {
  // A checkpoint whose last-layer weight generators are all zero probes to
  // exactly uniform branch weights.
  drpn::toy::ToyNet net = drpn::toy::ToyNet::init(3, 1);
  for (double& v : net.drpn2.f1.data) v = 0.0;
  for (double& v : net.drpn2.f2.data) v = 0.0;

  const fs::path dir = fs::temp_directory_path();
  const fs::path ckpt = dir / "drpn_cli_test_zero.ckpt";
  const fs::path csv = dir / "drpn_cli_test_zero_probe.csv";
  drpn::io::save_checkpoint_file(drpn::io::pack_toynet(net), ckpt.string());

  const RunResult r =
      run_cli("probe --ckpt " + ckpt.string() + " --frames 4 --out " + csv.string());
  EXPECT_EQ(r.exit_code, 0) << r.output;

  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');  // s
    while (std::getline(cells, cell, ',')) EXPECT_NEAR(std::stod(cell), 0.2, 1e-9) << line;
  }
  EXPECT_EQ(rows, 4);
}

TEST(Cli, BenchEmitsCsv) {
  const fs::path csv = fs::temp_directory_path() / "drpn_cli_test_bench.csv";
  const RunResult r =
      run_cli("bench --cin 2 --cout 2 --hw 8 --reps 5 --out " + csv.string());
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(count_lines(csv), 4);  // header + 3 modes
}
