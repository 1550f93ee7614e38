#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "noisebench/noisebench.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace noisebench;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("noisebench_cli_" + std::string(info->name()) + "_" +
                                        std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  RunResult run(const std::string& args) const {
    const auto out_file = dir_ / "stdout.txt";
    const std::string cmd = std::string("\"") + NOISEBENCH_CLI + "\" " + args + " > \"" + out_file.string() +
                            "\" 2> \"" + (dir_ / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    return r;
  }

  std::string write_image(const std::string& name, const Image& img) const {
    write_ppm_file(path(name), img);
    return path(name).string();
  }

  static std::string model_path() { return (testsupport::data_dir() / "models" / "surrogate.json").string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, CorruptAtZeroDensityIsIdentity) {
  const auto in = write_image("in.ppm", testsupport::random_image(20, 10, 1));
  const auto r = run("corrupt --in " + in + " --out " + path("out.ppm").string() + " --density 0 --seed 5");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "psnr_db=inf\n");
  EXPECT_EQ(slurp(in), slurp(path("out.ppm")));
}

TEST_F(CliTest, CorruptIsSeedDeterministic) {
  const auto in = write_image("in.ppm", testsupport::random_image(20, 10, 2));
  ASSERT_EQ(run("corrupt --in " + in + " --out " + path("a.ppm").string() + " --density 0.3 --seed 9").exit_code, 0);
  ASSERT_EQ(run("corrupt --in " + in + " --out " + path("b.ppm").string() + " --density 0.3 --seed 9").exit_code, 0);
  ASSERT_EQ(run("corrupt --in " + in + " --out " + path("c.ppm").string() + " --density 0.3 --seed 10").exit_code, 0);
  EXPECT_EQ(slurp(path("a.ppm")), slurp(path("b.ppm")));
  EXPECT_NE(slurp(path("a.ppm")), slurp(path("c.ppm")));
  const Image expected = add_impulse(read_ppm_file(in), 0.3, 9);
  EXPECT_EQ(read_ppm_file(path("a.ppm")), expected);
}

TEST_F(CliTest, CorruptGaussian) {
  const auto in = write_image("in.ppm", testsupport::random_image(12, 12, 3));
  ASSERT_EQ(run("corrupt --in " + in + " --out " + path("g.ppm").string() + " --noise gaussian --sigma 15 --seed 4")
                .exit_code,
            0);
  EXPECT_EQ(read_ppm_file(path("g.ppm")), add_gaussian(read_ppm_file(in), 15.0, 4));
}

TEST_F(CliTest, RejectsBadArguments) {
  const auto in = write_image("in.ppm", testsupport::random_image(8, 8, 1));
  EXPECT_NE(run("corrupt --in " + in + " --out " + path("o.ppm").string() + " --density 1.5").exit_code, 0);
  EXPECT_NE(run("corrupt --in " + in + " --out " + path("o.ppm").string() + " --noise speckle").exit_code, 0);
  EXPECT_NE(run("corrupt --in " + path("missing.ppm").string() + " --out " + path("o.ppm").string()).exit_code, 0);
  EXPECT_NE(run("frobnicate").exit_code, 0);
  EXPECT_NE(run("").exit_code, 0);
}

TEST_F(CliTest, DenoiseCleanInputIsUnchanged) {
  const auto in = write_image("in.ppm", testsupport::random_image(16, 16, 5, 1, 254));
  ASSERT_EQ(run("denoise --in " + in + " --out " + path("d.ppm").string()).exit_code, 0);
  EXPECT_EQ(slurp(in), slurp(path("d.ppm")));
}

TEST_F(CliTest, DenoiseImprovesPsnr) {
  const Image clean = testsupport::bundled_image("coffee");
  const auto ref = write_image("clean.ppm", clean);
  const Image noisy = add_impulse(clean, 0.2, 3);
  const auto in = write_image("noisy.ppm", noisy);
  const auto r = run("denoise --in " + in + " --out " + path("d.ppm").string() + " --reference " + ref);
  ASSERT_EQ(r.exit_code, 0);
  ASSERT_EQ(r.out.rfind("psnr_db=", 0), 0u);
  const double restored = std::stod(r.out.substr(8));
  EXPECT_GT(restored, psnr(noisy, clean).db() + 5.0);
  EXPECT_EQ(read_ppm_file(path("d.ppm")), weighted_average_filter(noisy));
}

TEST_F(CliTest, Psnr) {
  const auto a = write_image("a.ppm", Image(4, 4, 0));
  const auto b = write_image("b.ppm", Image(4, 4, 255));
  const auto c = write_image("c.ppm", Image(5, 4, 0));
  auto r = run("psnr " + a + " " + a);
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "psnr_db=inf\n");
  r = run("psnr " + a + " " + b);
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "psnr_db=0.000000\n");
  EXPECT_NE(run("psnr " + a + " " + c).exit_code, 0);
}

TEST_F(CliTest, GenCorpusMatchesLibrary) {
  ASSERT_EQ(run("gen-corpus --out-dir " + path("corpus").string() + " --per-class 1 --corpus-seed 3").exit_code, 0);
  const auto expected = generate_synthetic_corpus(1, 3);
  for (const auto& s : expected) EXPECT_EQ(read_ppm_file(path("corpus") / (s.id + ".ppm")), s.image) << s.id;
  const std::string csv = slurp(path("corpus") / "corpus.csv");
  EXPECT_EQ(csv.rfind("file,label\n", 0), 0u);
  EXPECT_NE(csv.find(expected.front().id + ".ppm," + expected.front().label), std::string::npos);
}

TEST_F(CliTest, BundledModelIsReproducible) {
  ASSERT_EQ(run("build-surrogate --synthetic 2 --corpus-seed 2017 --seed 2017 --out " + path("m.json").string())
                .exit_code,
            0);
  const auto rebuilt = nlohmann::json::parse(slurp(path("m.json")));
  const auto bundled = nlohmann::json::parse(slurp(model_path()));
  EXPECT_EQ(rebuilt["classes"], bundled["classes"]);
  EXPECT_EQ(rebuilt["centroids"], bundled["centroids"]);
}

TEST_F(CliTest, AttackMatchesGoldenReport) {
  const auto r = run("attack --synthetic 1 --corpus-seed 7 --model " + model_path() +
                     " --seed 42 --min-score 0.15 --workers 3 --out " + path("attack.json").string() + " --csv " +
                     path("attack.csv").string());
  ASSERT_EQ(r.exit_code, 0);
  const auto report = nlohmann::json::parse(slurp(path("attack.json")));
  EXPECT_EQ(report["meta"]["seed"], 42);
  EXPECT_EQ(report["meta"]["command"], "attack");
  EXPECT_EQ(report["meta"]["gaussian_density_convention"], "sigma = density * 100");
  EXPECT_GOLDEN("cli.attack.synthetic1.seed42.result", report["result"]);
  EXPECT_GOLDEN("cli.attack.synthetic1.seed42.oracle", report["meta"]["oracle"]);
  EXPECT_EQ(slurp(path("attack.csv")).rfind("image_id,outcome_density,queries,baseline_top1,final_top1\n", 0), 0u);

  ASSERT_EQ(run("attack --synthetic 1 --corpus-seed 7 --model " + model_path() +
                " --seed 42 --min-score 0.15 --workers 1 --out " + path("again.json").string())
                .exit_code,
            0);
  EXPECT_EQ(nlohmann::json::parse(slurp(path("again.json")))["result"], report["result"]);
}

TEST_F(CliTest, AttackNeedsExactlyOneOracle) {
  EXPECT_EQ(run("attack --synthetic 1 --out " + path("x.json").string()).exit_code, 2);
  EXPECT_EQ(run("attack --synthetic 1 --constant a --model " + model_path() + " --out " + path("x.json").string())
                .exit_code,
            2);
  EXPECT_EQ(run("attack --constant a --out " + path("x.json").string()).exit_code, 2);
}

TEST_F(CliTest, CurveWithConstantOracleIsFlatZero) {
  const auto r = run("curve --synthetic 1 --constant thing --densities 0.1,0.5,1.0 --repeats 2 --out " +
                     path("curve.csv").string() + " --json " + path("curve.json").string());
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(slurp(path("curve.csv")),
            "density,success_rate,n\n0.1000,0.000000,16\n0.5000,0.000000,16\n1.0000,0.000000,16\n");
  const auto j = nlohmann::json::parse(slurp(path("curve.json")));
  EXPECT_EQ(j["result"]["points"].size(), 3u);
  EXPECT_NE(run("curve --synthetic 1 --constant thing --densities 0.1,abc --out " + path("c.csv").string()).exit_code,
            0);
}

TEST_F(CliTest, EvaluateAtZeroNoise) {
  const auto r = run("evaluate --synthetic 1 --model " + model_path() + " --density 0 --out " +
                     path("eval.json").string());
  ASSERT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(slurp(path("eval.json")));
  EXPECT_EQ(j["result"]["summary"]["restoration_match_rate"], 1.0);
  EXPECT_EQ(j["result"]["summary"]["mean_jaccard_restored"], 1.0);
  EXPECT_EQ(j["result"]["summary"]["mean_psnr_noisy_db"], "inf");
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  std::ofstream(path("cfg.json")) << R"({"synthetic": 1, "constant": "thing", "densities": [0.2, 0.4], "repeats": 3})";
  auto r = run("curve --config " + path("cfg.json").string() + " --out " + path("a.csv").string());
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(slurp(path("a.csv")), "density,success_rate,n\n0.2000,0.000000,24\n0.4000,0.000000,24\n");
  r = run("curve --config " + path("cfg.json").string() + " --repeats 1 --out " + path("b.csv").string());
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(slurp(path("b.csv")), "density,success_rate,n\n0.2000,0.000000,8\n0.4000,0.000000,8\n");
  std::ofstream(path("bad.json")) << "[1,2]";
  EXPECT_NE(run("curve --config " + path("bad.json").string() + " --out " + path("c.csv").string()).exit_code, 0);
}
