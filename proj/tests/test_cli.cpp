#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "econet/dataio.hpp"
#include "econet/metrics.hpp"
#include "econet/synthetic.hpp"

using namespace econet;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args, std::map<std::string, std::string> env = {}) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, env, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("econet-cli-" + std::to_string(::getpid()) + "-" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string fixture(const std::string& name, std::size_t count, double noise = 0.15,
                      double offset = 0.10, bool labels = true) {
    const auto records = make_synthetic({count, noise, offset, 11});
    write_csv(path(name), records, labels);
    return path(name);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SummaryPrintsTableAndCounts) {
  const auto r = run_cli({"summary"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("4370"), std::string::npos);
  EXPECT_NE(r.out.find("4114"), std::string::npos);
  EXPECT_NE(r.out.find("256"), std::string::npos);
  for (const char* layer : {"Conv1D", "BatchNormalization", "GRU", "GlobalMaxPooling1D",
                            "Concatenate", "dense_1"})
    EXPECT_NE(r.out.find(layer), std::string::npos) << layer;
}

TEST_F(Cli, SummaryRecomputesForOtherWidths) {
  // GRU with 20 units on 1 input: 3*(20*1 + 20*20 + 2*20) = 1380,
  // flatten 16*20 = 320, dense 10: (128+320)*10+10 = 4490.
  const auto r = run_cli({"summary", "--gru-units", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  const int total = 512 + 512 + 1380 + 4490 + 66;
  EXPECT_NE(r.out.find(std::to_string(total)), std::string::npos) << r.out;
}

TEST_F(Cli, TrainWritesWeightsStatsAndEpochLines) {
  const auto data = fixture("train.csv", 600);
  const auto r = run_cli({"train", "--data", data, "--weights", path("w.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(lines[i].rfind("epoch=" + std::to_string(i + 1) + " ", 0), 0u) << lines[i];
    for (const char* key : {"train_loss=", "train_acc=", "val_loss=", "val_acc=", "seconds="})
      EXPECT_NE(lines[i].find(key), std::string::npos) << key;
  }
  EXPECT_TRUE(fs::exists(path("w.txt")));
  EXPECT_EQ(lines_of(slurp(path("w.txt.epochs"))).size(), 4u);
}

TEST_F(Cli, SameSeedGivesByteIdenticalWeights) {
  const auto data = fixture("train.csv", 400);
  for (const char* name : {"a.txt", "b.txt"})
    ASSERT_EQ(run_cli({"train", "--data", data, "--weights", path(name), "--epochs", "2"}).code, 0);
  const auto a = slurp(path("a.txt")), b = slurp(path("b.txt"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  ASSERT_EQ(run_cli({"train", "--data", data, "--weights", path("c.txt"), "--epochs", "2",
                     "--seed", "2"})
                .code,
            0);
  EXPECT_NE(a, slurp(path("c.txt")));
}

TEST_F(Cli, MissingFeatureColumnIsDataError) {
  std::ofstream(path("bad.csv")) << "pkts,bytes,category,subcategory\n1,2,Normal,Normal\n";
  const auto r = run_cli({"train", "--data", path("bad.csv"), "--weights", path("w.txt")});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("error[data]"), std::string::npos);
  EXPECT_NE(r.err.find("proto_number"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("w.txt")));
}

TEST_F(Cli, MissingDataFileIsDataError) {
  const auto r = run_cli({"train", "--data", path("nope.csv"), "--weights", path("w.txt")});
  EXPECT_EQ(r.code, cli::kDataError) << r.err;
}

TEST_F(Cli, EvalOnSeparableDataIsPerfect) {
  const auto data = fixture("easy.csv", 1200, 0.01, 0.02);
  ASSERT_EQ(run_cli({"train", "--data", data, "--weights", path("w.txt"), "--epochs", "6"}).code,
            0);
  const auto r = run_cli({"eval", "--data", data, "--weights", path("w.txt"), "--report",
                          path("report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Accuracy        1.00000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("confusion matrix"), std::string::npos);

  const auto text = slurp(path("report.json"));
  EXPECT_TRUE(nlohmann::json::parse(text).is_object());
  const auto rep = report_from_json(text);
  EXPECT_EQ(rep.overall.population, 1200u);
  EXPECT_EQ(rep.overall.accuracy, 1.0);
  ASSERT_TRUE(rep.overall.kappa.has_value());
  EXPECT_NEAR(*rep.overall.kappa, 1.0, 1e-12);
  EXPECT_NEAR(rep.overall.rci, 1.0, 1e-12);

  // the per-class table: one header line plus one line per statistic
  const auto table = format_class_table(rep);
  EXPECT_EQ(lines_of(table).size(), class_table_rows().size() + 1);
  EXPECT_EQ(class_table_rows().size(), 17u);
}

TEST_F(Cli, PredictPrintsOneNormalizedRowPerRecord) {
  const auto train = fixture("train.csv", 600);
  ASSERT_EQ(run_cli({"train", "--data", train, "--weights", path("w.txt")}).code, 0);
  const auto data = fixture("unlabeled.csv", 37, 0.15, 0.10, false);
  const auto r = run_cli({"predict", "--data", data, "--weights", path("w.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 37u);
  for (const auto& line : lines) {
    std::vector<std::string> cols;
    std::istringstream in(line);
    for (std::string c; std::getline(in, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 2 + kClassCount) << line;
    double sum = 0, best = -1;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < kClassCount; ++j) {
      const double p = std::stod(cols[2 + j]);
      sum += p;
      if (p > best) best = p, arg = j;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
    EXPECT_EQ(std::stoul(cols[0]), arg);
    EXPECT_EQ(cols[1], class_names()[arg]);
  }
}

TEST_F(Cli, FloatWeightsEvaluate) {
  const auto data = fixture("train.csv", 400);
  ASSERT_EQ(run_cli({"train", "--data", data, "--weights", path("w.txt"), "--precision", "single",
                     "--epochs", "1"})
                .code,
            0);
  EXPECT_NE(slurp(path("w.txt")).find("precision single"), std::string::npos);
  EXPECT_EQ(run_cli({"eval", "--data", data, "--weights", path("w.txt"), "--report", ""}).code, 0);
}

TEST_F(Cli, GradcheckPassesAndFailsWithExitCodes) {
  auto r = run_cli({"gradcheck"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("result=PASS"), std::string::npos);
  for (const char* layer : {"conv1d", "batch_normalization", "gru", "dense", "dense_1"})
    EXPECT_NE(r.out.find(std::string("layer=") + layer + " "), std::string::npos) << layer;

  r = run_cli({"gradcheck", "--tolerance", "1e-12"});
  EXPECT_EQ(r.code, cli::kNumericError);
  EXPECT_NE(r.out.find("result=FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("worst layer="), std::string::npos);
}

TEST_F(Cli, PrecedenceFlagsOverEnvOverFileOverDefaults) {
  std::ofstream(path("run.conf")) << "arch.gru_units = 20\narch.dense_units = 12\n";
  // file only: gru 20, dense 12
  auto r = run_cli({"summary", "--config", path("run.conf"), "--verbose"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("arch.gru_units = 20  (" + path("run.conf")), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("arch.kernel_size = 3  (default)"), std::string::npos);

  // env beats file
  r = run_cli({"summary", "--config", path("run.conf"), "--verbose"},
              {{"ECONET_ARCH_GRU_UNITS", "5"}});
  EXPECT_NE(r.err.find("arch.gru_units = 5  (ECONET_ARCH_GRU_UNITS)"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("arch.dense_units = 12"), std::string::npos);

  // flag beats env
  r = run_cli({"summary", "--config", path("run.conf"), "--verbose", "--gru-units", "7"},
              {{"ECONET_ARCH_GRU_UNITS", "5"}});
  EXPECT_NE(r.err.find("arch.gru_units = 7  (command line)"), std::string::npos) << r.err;

  // config path from the environment
  r = run_cli({"summary", "--verbose"}, {{"ECONET_CONFIG", path("run.conf")}});
  EXPECT_NE(r.err.find("arch.dense_units = 12"), std::string::npos) << r.err;
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  std::ofstream(path("bad.conf")) << "arch.gru_unitz = 20\n";
  auto r = run_cli({"summary", "--config", path("bad.conf")});
  EXPECT_EQ(r.code, cli::kConfigError);
  EXPECT_NE(r.err.find("gru_unitz"), std::string::npos) << r.err;

  EXPECT_EQ(run_cli({"summary", "--config", path("missing.conf")}).code, cli::kConfigError);
  const auto data = fixture("train.csv", 20);
  EXPECT_EQ(run_cli({"train", "--epochs", "many", "--data", data}).code, cli::kConfigError);
  EXPECT_EQ(run_cli({"summary", "--no-such-flag"}).code, cli::kConfigError);
  EXPECT_EQ(run_cli({}).code, cli::kConfigError);
  EXPECT_EQ(run_cli({"summary"}, {{"ECONET_ARCH_GRU_UNITS", "0"}}).code, cli::kConfigError);
}

TEST_F(Cli, BinaryAndFixtureToolEndToEnd) {
  const std::string csv = path("fixture.csv");
  const std::string make = std::string(ECONET_FIXTURE_TOOL) + " " + csv + " --count 300";
  ASSERT_EQ(std::system(make.c_str()), 0);
  EXPECT_EQ(lines_of(slurp(csv)).size(), 301u);

  const std::string bin = ECONET_BINARY;
  const std::string train = "cd " + dir_.string() + " && " + bin + " train --data " + csv +
                            " --epochs 1 > train.out 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(train.c_str())), 0) << slurp(path("train.out"));
  EXPECT_TRUE(fs::exists(path("econet.weights")));
  EXPECT_TRUE(fs::exists(path("econet.weights.epochs")));

  const std::string fail =
      "ECONET_TOLERANCE=1e-12 " + bin + " gradcheck --probes 10 > " + path("gc.out") + " 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(fail.c_str())), cli::kNumericError);
  EXPECT_NE(slurp(path("gc.out")).find("result=FAIL"), std::string::npos);
}
