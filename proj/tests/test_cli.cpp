// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr merged into stdout.
Result sfbf(const std::string& args) {
  const std::string cmd = std::string(SFBF_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sfbf_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

TEST_F(Cli, RunIsDeterministicAcrossWorkers) {
  const auto bench = dir_ / "bench.json";
  auto g = sfbf("gen-benchmark --generator strongly_monotone_affine --d 6 --mu 1 --L 3 --seed 4 --out " +
                bench.string());
  ASSERT_EQ(g.code, 0) << g.out;
  const json cfg = {{"benchmark", {{"file", "bench.json"}}},
                    {"noise", {{"model", "gaussian_decay"}, {"sigma0", 0.5}, {"p", 1.0}}},
                    {"eps", {{"eps0", 0.1}, {"theta", 2.0}}},
                    {"theta", 0.5},
                    {"replications", 5},
                    {"horizon", 500},
                    {"seed", 9}};
  const auto path = write("run.json", cfg.dump());
  auto a = sfbf("run --config " + path.string() + " --workers 1 --out " + (dir_ / "a.csv").string());
  auto b = sfbf("run --config " + path.string() + " --workers 3 --out " + (dir_ / "b.csv").string());
  ASSERT_EQ(a.code, 0) << a.out;
  ASSERT_EQ(b.code, 0) << b.out;
  const auto csv = slurp(dir_ / "a.csv");
  EXPECT_EQ(csv, slurp(dir_ / "b.csv"));
  EXPECT_EQ(csv.rfind("n,mean_sq_dist,std,min,max,count\n", 0), 0u);
  const auto summary = json::parse(slurp(dir_ / "a.csv.json"));
  EXPECT_EQ(summary.at("benchmark").at("dimension"), 6);
}

TEST_F(Cli, RunFlagsOverrideConfig) {
  const json cfg = {{"benchmark", {{"generator", "monotone_skew"}, {"d", 4}, {"seed", 1}}},
                    {"noise", {{"model", "gaussian_constant"}, {"sigma0", 0.1}}},
                    {"replications", 1},
                    {"horizon", 50}};
  const auto path = write("run.json", cfg.dump());
  auto refused = sfbf("run --config " + path.string());
  EXPECT_EQ(refused.code, 2);
  EXPECT_NE(refused.out.find("override"), std::string::npos);
  auto ok = sfbf("run --config " + path.string() + " --override-conditions --horizon 20 --replications 2 --seed 3 "
                 "--out " + (dir_ / "o.csv").string());
  ASSERT_EQ(ok.code, 0) << ok.out;
  const auto csv = slurp(dir_ / "o.csv");
  EXPECT_NE(csv.find("\n20,"), std::string::npos);
  EXPECT_NE(csv.find(",2\n"), std::string::npos);
}

TEST_F(Cli, PdRunEmitsCertificate) {
  const json cfg = {{"benchmark", {{"generator", "bilinear_saddle"}, {"d_primal", 4}, {"d_dual", 3}, {"seed", 1}}},
                    {"noise", {{"model", "gaussian_constant"}, {"sigma0", 0.0}}},
                    {"replications", 2},
                    {"horizon", 100}};
  const auto path = write("pd.json", cfg.dump());
  auto r = sfbf("pd-run --config " + path.string() + " --out " + (dir_ / "pd.csv").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(dir_ / "pd.csv").rfind("N,mean_gap,std,bound\n", 0), 0u);
  const auto s = json::parse(slurp(dir_ / "pd.csv.json"));
  for (const char* k : {"N", "bound", "empirical_gap", "S", "T", "C"}) EXPECT_TRUE(s.at("certificate").contains(k)) << k;
  EXPECT_LE(s["certificate"]["empirical_gap"].get<double>(), s["certificate"]["bound"].get<double>());
}

TEST_F(Cli, RateFit) {
  std::string csv = "n,mean_sq_dist,std,min,max,count\n";
  for (int n = 1; n <= 100; ++n) csv += std::to_string(n) + "," + std::to_string(1.0 / n) + ",0,0,0,1\n";
  const auto path = write("fit.csv", csv);
  auto r = sfbf("rate-fit " + path.string() + " --window 10 100");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(json::parse(r.out).at("fitted_slope").get<double>(), -1.0, 1e-5);

  r = sfbf("rate-fit " + path.string() + " --alpha 0.75 --beta 2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_DOUBLE_EQ(json::parse(r.out).at("theory_slope").get<double>(), -1.25);

  r = sfbf("rate-fit " + path.string() + " --window 200 300");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("error"), std::string::npos);
}

TEST_F(Cli, RateFitMalformedCsvReportsLine) {
  const auto path = write("bad.csv", "n,mean\n1,0.5\n2,oops\n");
  auto r = sfbf("rate-fit " + path.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("line 3"), std::string::npos) << r.out;
}

TEST_F(Cli, ValidateSuiteRoutingAndExitCode) {
  auto r = sfbf("validate operators --out " + (dir_ / "v.json").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rep = json::parse(slurp(dir_ / "v.json"));
  EXPECT_TRUE(rep.at("passed").get<bool>());
  bool firm = false, moreau = false;
  for (const auto& c : rep.at("checks")) {
    EXPECT_EQ(c.at("suite"), "operators");
    const auto name = c.at("name").get<std::string>();
    firm |= name.find("firm") != std::string::npos;
    moreau |= name.find("moreau") != std::string::npos;
  }
  EXPECT_TRUE(firm);
  EXPECT_TRUE(moreau);

  r = sfbf("validate lemma36 --out " + (dir_ / "l.json").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_GT(json::parse(slurp(dir_ / "l.json")).at("total").get<int>(), 0);

  r = sfbf("validate nonsense");
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, GenBenchmarkToStdout) {
  auto r = sfbf("gen-benchmark --generator lasso --m 10 --d 4 --tau 0.1 --seed 2");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("kind"), "lasso");
  EXPECT_EQ(r.out, sfbf("gen-benchmark --generator lasso --m 10 --d 4 --tau 0.1 --seed 2").out);
}

TEST_F(Cli, MissingConfigIsAnError) {
  auto r = sfbf("run --config " + (dir_ / "missing.json").string());
  EXPECT_NE(r.code, 0);
  r = sfbf("");
  EXPECT_NE(r.code, 0);
}

}  // namespace
