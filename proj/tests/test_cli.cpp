// End-to-end checks of the sphlap command-line tool. The binary path is
// injected at build time as SPHLAP_CLI_PATH.

#include "sphlap/io.hpp"
#include "sphlap/mle.hpp"
#include "support/stats.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace sphlap {
namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sphlap_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  /// Runs the tool; returns its exit status. stderr goes to `stderr.txt`.
  int run(const std::string& args) const {
    const std::string cmd = std::string(SPHLAP_CLI_PATH) + " " + args + " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(Cli, SampleIsDeterministicWithSidecar) {
  ASSERT_EQ(run("sample --p 2 --sigma 1 --n 100 --seed 7 -o " + path("a.csv")), 0);
  ASSERT_EQ(run("sample --p 2 --sigma 1 --n 100 --seed 7 -o " + path("b.csv")), 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(read_points_csv(path("a.csv")).points.size(), 100u);
  const auto side = nlohmann::json::parse(slurp(path("a.csv.json")));
  EXPECT_EQ(side["report"]["n_accepted"], 100);
  EXPECT_GT(side["report"]["n_proposed"].get<long long>(), 100);
  EXPECT_EQ(side["config"]["seed"], 7);
  EXPECT_EQ(side["config"]["method"], "rejection");
}

TEST_F(Cli, OracleAndRejectionSamplesAgree) {
  ASSERT_EQ(run("sample --p 2 --sigma 1 --n 10000 --method oracle --seed 1 -o " + path("o.csv")), 0);
  ASSERT_EQ(run("sample --p 2 --sigma 1 --n 10000 --method rejection --seed 2 -o " + path("r.csv")), 0);
  const UnitVector mu = UnitVector::north_pole(2);
  std::vector<double> a;
  std::vector<double> b;
  for (const auto& x : read_points_csv(path("o.csv")).points) a.push_back(geodesic_distance(x, mu));
  for (const auto& x : read_points_csv(path("r.csv")).points) b.push_back(geodesic_distance(x, mu));
  EXPECT_GT(testing::ks_two_sample(a, b).p_value, 0.01);
}

TEST_F(Cli, SampleZeroPoints) {
  ASSERT_EQ(run("sample --p 3 --sigma 0.5 --n 0 -o " + path("e.csv")), 0);
  EXPECT_EQ(slurp(path("e.csv")), "x0,x1,x2,x3\n");
}

TEST_F(Cli, SampleRejectionAbortSuggestsMH) {
  EXPECT_EQ(run("sample --p 2 --sigma 0.01 --n 10 -o " + path("s.csv")), 1);
  EXPECT_NE(slurp(path("stderr.txt")).find("MH"), std::string::npos);
  EXPECT_EQ(run("sample --p 2 --sigma 0.01 --n 10 --method mh -o " + path("s.csv")), 0);
}

TEST_F(Cli, FitIsIdempotent) {
  ASSERT_EQ(run("sample --p 5 --sigma 0.1 --n 500 --method oracle --seed 3 -o " + path("d.csv")), 0);
  ASSERT_EQ(run("fit -i " + path("d.csv") + " -o " + path("f1.json")), 0);
  ASSERT_EQ(run("fit -i " + path("d.csv") + " -o " + path("f2.json")), 0);
  // Identical apart from the echoed output path.
  auto rep = nlohmann::json::parse(slurp(path("f1.json")));
  auto rep2 = nlohmann::json::parse(slurp(path("f2.json")));
  rep["config"].erase("output");
  rep2["config"].erase("output");
  EXPECT_EQ(rep.dump(), rep2.dump());
  EXPECT_NEAR(rep["sigma_hat"].get<double>(), 0.1, 0.02);
  EXPECT_TRUE(rep.contains("mu_hat"));
  EXPECT_TRUE(rep.contains("log_likelihood"));
}

TEST_F(Cli, FitTwoPoints) {
  std::ofstream(path("two.csv")) << "x0,x1,x2\n1,0,0\n" << format_double(std::cos(0.3)) << ","
                                 << format_double(std::sin(0.3)) << ",0\n";
  ASSERT_EQ(run("fit -i " + path("two.csv") + " -o " + path("f.json")), 0);
  const auto rep = nlohmann::json::parse(slurp(path("f.json")));
  const double expected = estimate_sigma_newton_exact(0.15, 2, 0.15).sigma_hat;
  EXPECT_NEAR(rep["sigma_hat"].get<double>(), expected, 1e-8);
}

TEST_F(Cli, FitErrors) {
  std::ofstream(path("bad.csv")) << "x0,x1\n1,0\n0,zz\n";
  EXPECT_EQ(run("fit -i " + path("bad.csv")), 1);
  EXPECT_NE(slurp(path("stderr.txt")).find("line 3"), std::string::npos);
  std::ofstream(path("one.csv")) << "x0,x1\n1,0\n";
  EXPECT_EQ(run("fit -i " + path("one.csv")), 1);
}

TEST_F(Cli, ClusterWritesLabelsModelAndIndices) {
  std::ofstream out(path("pts.csv"));
  out << "x0,x1,x2,label\n";
  for (int i = 0; i < 20; ++i) {
    const double t = 0.01 * i;
    out << "1," << t << ",0,0\n" << "0," << t << ",1,1\n";
  }
  out.close();
  ASSERT_EQ(run("cluster -i " + path("pts.csv") + " --K 2 -o " + path("labels.csv") + " --model-out " +
                path("model.json") + " --indices-out " + path("idx.json")),
            0);
  const auto idx = nlohmann::json::parse(slurp(path("idx.json")));
  EXPECT_EQ(idx["jaccard"], 1.0);
  const auto model = mixture_from_json(nlohmann::json::parse(slurp(path("model.json"))));
  EXPECT_EQ(model.K(), 2);
  EXPECT_EQ(slurp(path("labels.csv")).rfind("index,label\n", 0), 0u);

  ASSERT_EQ(run("cluster -i " + path("pts.csv") + " --K 1 -o " + path("l1.csv") + " --indices-out " +
                path("i1.json")),
            0);
  EXPECT_EQ(nlohmann::json::parse(slurp(path("i1.json")))["nmi"], 0.0);
  std::istringstream l1(slurp(path("l1.csv")));
  std::string line;
  std::getline(l1, line);
  while (std::getline(l1, line)) EXPECT_EQ(line.substr(line.find(',') + 1), "0");
  EXPECT_EQ(run("cluster -i " + path("pts.csv") + " --K 41"), 1);
}

TEST_F(Cli, TablesAndDeterminism) {
  ASSERT_EQ(run("smallmix --K 2 --repeats 2 -o " + path("sm.csv")), 0);
  EXPECT_NE(slurp(path("sm.csv")).find("moSL-soft"), std::string::npos);
  ASSERT_EQ(run("household --synthetic --repeats 2 -o " + path("hh.csv")), 0);
  ASSERT_EQ(run("bench-scale --p 5 --sigma 0.1 --n 50 --repeats 3 --omit-timing -o " + path("b1.csv")), 0);
  ASSERT_EQ(run("bench-scale --p 5 --sigma 0.1 --n 50 --repeats 3 --omit-timing -o " + path("b2.csv")), 0);
  EXPECT_EQ(slurp(path("b1.csv")), slurp(path("b2.csv")));
  ASSERT_EQ(run("bench-location --p 5 --sigma 0.1 --n 50 --repeats 3 --format json -o " + path("bl.json")), 0);
  const auto j = nlohmann::json::parse(slurp(path("bl.json")));
  EXPECT_EQ(j["rows"].size(), 1u);
  EXPECT_EQ(j["config"]["seed"], 20240101);
}

TEST_F(Cli, HouseholdMissingColumns) {
  std::ofstream(path("h.csv")) << "food,rent,gender\n1,2,F\n";
  EXPECT_EQ(run("household -i " + path("h.csv")), 1);
  EXPECT_NE(slurp(path("stderr.txt")).find("available columns"), std::string::npos);
}

}  // namespace
}  // namespace sphlap
