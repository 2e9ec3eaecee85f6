#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "opval/io.hpp"
#include "opval/rmt.hpp"

namespace opval {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("opval_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("OPVAL_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    unsetenv("OPVAL_SEED");
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(Cli, SolveToeplitz3Certified) {
  const auto r = run({"solve", "--eta", "toeplitz3", "--z", "0+1e-6i"});
  EXPECT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_TRUE(j["certificate"]["holds"].get<bool>());
  EXPECT_FALSE(j["wrong_root"].get<bool>());
}

TEST_F(Cli, SolveNewtonWrongRoot) {
  const auto r = run({"solve", "--method", "newton", "--eta", "toeplitz3", "--z", "0+1e-9i", "--initial",
                      "toeplitz3-start"});
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_TRUE(json::parse(r.out)["wrong_root"].get<bool>());
}

TEST_F(Cli, SolveHybridSameInstanceCertified) {
  const auto r = run({"solve", "--method", "hybrid", "--eta", "toeplitz3", "--z", "0+1e-9i", "--initial",
                      "toeplitz3-start"});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(Cli, SolveNotConverged) {
  const auto r = run({"solve", "--eta", "semicircle", "--z", "0.5+0.01i", "--max-iter", "2"});
  EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, MalformedConfig) {
  const auto cfg = write("bad.json", "{\"solver\": ");
  EXPECT_EQ(run({"solve", "--config", cfg, "--z", "1i"}).code, 64);
}

TEST_F(Cli, UnknownConfigKey) {
  const auto cfg = write("extra.json", R"({"solver": {"method": "plain", "speed": 3}})");
  const auto r = run({"solve", "--config", cfg, "--z", "1i"});
  EXPECT_EQ(r.code, 64);
  EXPECT_NE(r.err.find("solver.speed"), std::string::npos);
  const auto top = write("top.json", R"({"colour": 1})");
  EXPECT_EQ(run({"solve", "--config", top, "--z", "1i"}).code, 64);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 64);
  EXPECT_EQ(run({"frobnicate"}).code, 64);
  EXPECT_EQ(run({"solve", "--z"}).code, 64);
  EXPECT_EQ(run({"solve"}).code, 64);
  EXPECT_EQ(run({"solve", "--z", "1-1i"}).code, 64);
  EXPECT_EQ(run({"solve", "--z", "one"}).code, 64);
  EXPECT_EQ(run({"solve", "--z", "1i", "--method", "magic"}).code, 64);
  EXPECT_EQ(run({"solve", "--z", "1i", "--theta", "0"}).code, 64);
  EXPECT_EQ(run({"solve", "--z", "1i", "--eta", "semicircle", "--initial", "toeplitz3-start"}).code, 64);
  EXPECT_EQ(run({"solve", "--z", "1i", "--method", "hybrid", "--newton-switch-tol", "1e-13"}).code, 64);
  EXPECT_EQ(run({"solve", "--z", "1i", "--eta", path("missing.json")}).code, 64);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, EtaFromFile) {
  const auto eta = write("eta.json", R"({"kind": "kraus", "dim": 1, "data": [[[[1, 0]]]]})");
  const auto r = run({"solve", "--eta", eta, "--z", "2i"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["W"][0][0][0].get<double>(), std::sqrt(2.0) - 1.0, 1e-12);
  const auto dim = write("dim.json", R"({"dim": 3, "eta": "semicircle"})");
  EXPECT_EQ(run({"solve", "--config", dim, "--z", "1i"}).code, 64);
}

TEST_F(Cli, SweepSemicircleIntegral) {
  const auto out = path("semi.csv");
  const auto r = run({"sweep", "--eta", "semicircle", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out);
  const auto curve = read_curve_csv(in);
  EXPECT_EQ(curve.rows.size(), 601u);
  EXPECT_NEAR(integrate_density(curve), 1.0, 5e-3);
  EXPECT_TRUE(fs::exists(out + ".manifest.json"));
}

TEST_F(Cli, SweepRejectsEmptyRange) {
  EXPECT_EQ(run({"sweep", "--t-min", "1", "--t-max", "0"}).code, 64);
  EXPECT_EQ(run({"sweep", "--step", "-1"}).code, 64);
  EXPECT_EQ(run({"sweep", "--im-offset", "0"}).code, 64);
}

TEST_F(Cli, SweepFailedRowsExitOne) {
  const auto r = run({"sweep", "--method", "plain", "--max-iter", "3", "--t-min", "-0.1", "--t-max", "0.1",
                      "--step", "0.1", "--out", path("f.csv")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(slurp(path("f.csv")).find("nan"), std::string::npos);
}

TEST_F(Cli, ManifestReproducesBitIdentically) {
  const auto out = path("t3.csv");
  ASSERT_EQ(run({"sweep", "--method", "hybrid", "--step", "0.05", "--out", out}).code, 0);
  const std::string first = slurp(out);
  const json manifest = json::parse(slurp(out + ".manifest.json"));
  EXPECT_EQ(manifest["command"], "sweep");
  EXPECT_EQ(manifest["version"], cli::kVersion);
  EXPECT_EQ(manifest["config"]["solver"]["method"], "hybrid");
  fs::remove(out);
  ASSERT_EQ(run({"sweep", "--config", out + ".manifest.json"}).code, 0);
  EXPECT_EQ(slurp(out), first);
  // A manifest is tied to its subcommand.
  EXPECT_EQ(run({"solve", "--config", out + ".manifest.json", "--z", "1i"}).code, 64);
}

TEST_F(Cli, FlagsOverrideConfig) {
  const auto cfg = write("cfg.json", R"({"eta": "semicircle", "solver": {"max_iter": 2}})");
  EXPECT_EQ(run({"solve", "--config", cfg, "--z", "0.5+0.01i"}).code, 1);
  EXPECT_EQ(run({"solve", "--config", cfg, "--z", "0.5+0.01i", "--max-iter", "100000"}).code, 0);
}

TEST_F(Cli, SeedPrecedence) {
  const auto cfg = write("cfg.json", R"({"oracle": {"seed": 5, "N": 20, "trials": 2, "bins": 10}})");
  ASSERT_EQ(run({"sample", "--config", cfg, "--out", path("a.csv")}).code, 0);
  auto seed_of = [&](const std::string& f) {
    return json::parse(slurp(f + ".manifest.json"))["config"]["oracle"]["seed"].get<std::uint64_t>();
  };
  EXPECT_EQ(seed_of(path("a.csv")), 5u);
  setenv("OPVAL_SEED", "11", 1);
  ASSERT_EQ(run({"sample", "--config", cfg, "--out", path("b.csv")}).code, 0);
  EXPECT_EQ(seed_of(path("b.csv")), 11u);
  ASSERT_EQ(run({"sample", "--config", cfg, "--seed", "13", "--out", path("c.csv")}).code, 0);
  EXPECT_EQ(seed_of(path("c.csv")), 13u);
  setenv("OPVAL_SEED", "not-a-number", 1);
  EXPECT_EQ(run({"sample", "--config", cfg}).code, 64);
}

TEST_F(Cli, SampleDeterministic) {
  const std::vector<std::string> base{"sample", "--profile", "wigner", "--N", "50", "--trials", "3",
                                      "--bins", "12", "--seed", "4"};
  auto a = base;
  a.insert(a.end(), {"--out", path("a.csv")});
  auto b = base;
  b.insert(b.end(), {"--out", path("b.csv"), "--threads", "2"});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(run({"sample", "--bins", "5"}).code, 64);
  EXPECT_EQ(run({"sample", "--profile", "banded"}).code, 64);
}

TEST_F(Cli, Toeplitz3SweepVersusSample) {
  ASSERT_EQ(run({"sweep", "--method", "hybrid", "--step", "0.02", "--t-min", "-3.5", "--t-max", "3.5",
                 "--out", path("curve.csv")})
                .code,
            0);
  ASSERT_EQ(run({"sample", "--N", "150", "--trials", "20", "--seed", "3", "--out", path("hist.csv")}).code, 0);
  const auto r = run({"compare", path("curve.csv"), path("hist.csv"), "--out", path("report.json")});
  EXPECT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(slurp(path("report.json")));
  EXPECT_LE(rep["l1"].get<double>(), 0.05);
  EXPECT_EQ(rep["N"], 150);
  EXPECT_EQ(rep["trials"], 20);
  EXPECT_EQ(rep["seed"], 3);
  EXPECT_TRUE(rep.contains("ks"));
}

TEST_F(Cli, CompareSelfSample) {
  ASSERT_EQ(run({"sweep", "--eta", "semicircle", "--out", path("curve.csv")}).code, 0);
  std::ifstream in(path("curve.csv"));
  const auto curve = read_curve_csv(in);
  const auto h = make_histogram(sample_from_curve(curve, 1000000, 2), 40);
  std::ofstream hist(path("hist.csv"));
  write_histogram_csv(h, hist);
  hist.close();
  const auto r = run({"compare", path("curve.csv"), path("hist.csv"), "--threshold", "0.01"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_TRUE(json::parse(r.out)["trials"].is_null());
  EXPECT_LE(json::parse(r.out)["l1"].get<double>(), 0.01);
}

TEST_F(Cli, CompareThresholdAndErrors) {
  ASSERT_EQ(run({"sweep", "--eta", "semicircle", "--step", "0.05", "--out", path("curve.csv")}).code, 0);
  ASSERT_EQ(run({"sample", "--profile", "wigner", "--N", "100", "--trials", "2", "--out", path("hist.csv")}).code,
            0);
  EXPECT_EQ(run({"compare", path("curve.csv"), path("hist.csv"), "--threshold", "0"}).code, 1);
  EXPECT_EQ(run({"compare", path("curve.csv"), path("missing.csv")}).code, 65);
  EXPECT_EQ(run({"compare", path("curve.csv")}).code, 64);
  write("garbage.csv", "a,b\n1,2\n");
  EXPECT_EQ(run({"compare", path("curve.csv"), path("garbage.csv")}).code, 65);
}

TEST_F(Cli, CompareSupportMismatch) {
  ASSERT_EQ(run({"sweep", "--eta", "semicircle", "--t-min", "0", "--t-max", "1", "--step", "0.05", "--out",
                 path("half.csv")})
                .code,
            0);
  ASSERT_EQ(run({"sample", "--profile", "wigner", "--N", "100", "--trials", "2", "--out", path("hist.csv")}).code,
            0);
  const auto r = run({"compare", path("half.csv"), path("hist.csv")});
  EXPECT_EQ(r.code, 65);
  EXPECT_NE(r.err.find("outside"), std::string::npos);
}

TEST_F(Cli, InputsUnchanged) {
  ASSERT_EQ(run({"sweep", "--eta", "semicircle", "--step", "0.05", "--out", path("curve.csv")}).code, 0);
  ASSERT_EQ(run({"sample", "--profile", "wigner", "--N", "100", "--trials", "2", "--out", path("hist.csv")}).code,
            0);
  const std::string c = slurp(path("curve.csv"));
  const std::string h = slurp(path("hist.csv"));
  run({"compare", path("curve.csv"), path("hist.csv")});
  EXPECT_EQ(slurp(path("curve.csv")), c);
  EXPECT_EQ(slurp(path("hist.csv")), h);
}

}  // namespace
}  // namespace opval
