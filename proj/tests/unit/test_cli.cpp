#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mixnet/spectral/cube_io.hpp"
#include "mixnet_cli/cli.hpp"

namespace fs = std::filesystem;
namespace cli = mixnet::cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "mixnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mixnet_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small and fast network settings shared by the run subcommands.
std::vector<std::string> tiny(const fs::path& out) {
  return {"--h", "8", "--w", "8", "--l", "4", "--r", "2", "--rank", "2", "--arch_layers", "1", "--arch_features",
          "4", "--iterations", "3", "--d", "2", "--out-dir", out.string()};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"fly"}).code, cli::kExitUsage);
  const auto bogus = run({"denoise", "--bogus", "3"});
  EXPECT_EQ(bogus.code, cli::kExitUsage);
  EXPECT_NE(bogus.err.find("--bogus"), std::string::npos);
  const auto bad_value = run({"csi", "--arch", "mlp"});
  EXPECT_EQ(bad_value.code, cli::kExitUsage);
  EXPECT_NE(bad_value.err.find("mlp"), std::string::npos);
  EXPECT_EQ(run({"sr", "--rho", "2"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"sweep", "--harness", "colors"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"denoise", "--help"}).code, cli::kExitOk);
}

TEST(Cli, UnknownConfigFileKeyIsUsageError) {
  const auto dir = fresh_dir("config_key");
  std::ofstream(dir / "run.cfg") << "# test\nrank=2\nwidth=9\n";
  const auto r = run({"denoise", "--config", (dir / "run.cfg").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("width"), std::string::npos);
}

TEST(Cli, SynthIsDeterministic) {
  const auto dir = fresh_dir("synth");
  for (const char* sub : {"a", "b"}) {
    const auto r = run({"synth", "--h", "32", "--w", "32", "--l", "8", "--r", "3", "--seed", "7", "--out-dir",
                        (dir / sub).string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  }
  for (const char* f : {"cube.spc", "abundances.spc", "endmembers.csv", "cube_rgb.png"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  EXPECT_EQ(run({"synth", "--l", "2", "--r", "3", "--out-dir", (dir / "c").string()}).code, cli::kExitUsage);
}

TEST(Cli, MetricsOfIdenticalCubes) {
  const auto dir = fresh_dir("metrics");
  ASSERT_EQ(run({"synth", "--h", "16", "--w", "16", "--out-dir", dir.string()}).code, cli::kExitOk);
  const auto cube = (dir / "cube.spc").string();
  const auto r = run({"metrics", "--ref", cube, "--est", cube});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("psnr=inf\n"), std::string::npos);
  EXPECT_NE(r.out.find("sam=0\n"), std::string::npos);
  EXPECT_EQ(run({"metrics", "--ref", (dir / "missing.spc").string(), "--est", cube}).code, cli::kExitRuntime);
}

TEST(Cli, DenoiseRecordsEstimatedSigma) {
  const auto dir = fresh_dir("denoise");
  const auto r = run(concat({"denoise"}, tiny(dir / "auto")));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("(estimated)"), std::string::npos);
  const std::string run_txt = slurp(dir / "auto" / "run.txt");
  EXPECT_NE(run_txt.find("sigma_source=estimated"), std::string::npos);
  EXPECT_NE(run_txt.find("resolved_fidelity=sure"), std::string::npos);

  const auto fixed = run(concat({"denoise", "--sigma", "0.1"}, tiny(dir / "fixed")));
  ASSERT_EQ(fixed.code, cli::kExitOk) << fixed.err;
  EXPECT_NE(slurp(dir / "fixed" / "run.txt").find("sigma_source=config"), std::string::npos);
}

TEST(Cli, RunsAreBitwiseReproducible) {
  const auto dir = fresh_dir("repro");
  ASSERT_EQ(run(concat({"csi", "--seed", "5"}, tiny(dir / "a"))).code, cli::kExitOk);
  ASSERT_EQ(run(concat({"csi", "--seed", "5"}, tiny(dir / "b"))).code, cli::kExitOk);
  EXPECT_EQ(slurp(dir / "a" / "recovered.spc"), slurp(dir / "b" / "recovered.spc"));
  EXPECT_EQ(slurp(dir / "a" / "log.csv"), slurp(dir / "b" / "log.csv"));
}

TEST(Cli, ConfigFileWithOverrides) {
  const auto dir = fresh_dir("config");
  std::ofstream(dir / "sr.cfg") << "lambda=0.2\niterations=50\n";
  const auto r = run(concat({"sr", "--config", (dir / "sr.cfg").string()}, tiny(dir / "out")));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const std::string run_txt = slurp(dir / "out" / "run.txt");
  EXPECT_NE(run_txt.find("lambda=0.2\n"), std::string::npos);
  EXPECT_NE(run_txt.find("iterations=3\n"), std::string::npos);
  EXPECT_NE(run_txt.find("task=sr\n"), std::string::npos);
}

TEST(Cli, RunsOnSuppliedReferenceAndMeasurements) {
  const auto dir = fresh_dir("files");
  ASSERT_EQ(run({"synth", "--h", "8", "--w", "8", "--l", "4", "--r", "2", "--out-dir", dir.string()}).code,
            cli::kExitOk);
  const auto ref = (dir / "cube.spc").string();
  const auto with_ref = run(concat({"denoise", "--ref", ref}, tiny(dir / "ref")));
  ASSERT_EQ(with_ref.code, cli::kExitOk) << with_ref.err;
  EXPECT_NE(with_ref.out.find("psnr="), std::string::npos);

  // Measurements alone: no reference, no metrics.
  const auto meas_only = run(concat({"denoise", "--meas", ref}, tiny(dir / "meas")));
  ASSERT_EQ(meas_only.code, cli::kExitOk) << meas_only.err;
  EXPECT_EQ(meas_only.out.find("psnr="), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "meas" / "metrics.txt"));

  const auto wrong = run(concat({"sr", "--meas", ref}, tiny(dir / "wrong")));
  EXPECT_EQ(wrong.code, cli::kExitRuntime);
}

TEST(Cli, UnmixExportsThresholdMaps) {
  const auto dir = fresh_dir("unmix");
  const auto r = run(concat({"unmix"}, tiny(dir)));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "threshold" / "comp1.png"));
  EXPECT_TRUE(fs::exists(dir / "endmembers" / "block2.csv"));
  EXPECT_NE(r.out.find("mean_correlation="), std::string::npos);
}

TEST(Cli, SweepWritesCsv) {
  const auto dir = fresh_dir("sweep");
  const auto r = run(concat({"sweep", "--harness", "rank", "--values", "2,9", "--task", "csi"}, tiny(dir)));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const std::string csv = slurp(dir / "sweep.csv");
  EXPECT_EQ(csv.rfind("cell,status,", 0), 0u);
  EXPECT_NE(csv.find("rank=2,ok,"), std::string::npos);
  EXPECT_NE(csv.find("rank=9,failed,"), std::string::npos);
}

TEST(Cli, ConvertRawCube) {
  const auto dir = fresh_dir("convert");
  // 2 x 3 x 2 cube stored band-sequentially as float32.
  std::vector<float> bsq(12);
  for (std::size_t i = 0; i < bsq.size(); ++i) bsq[i] = static_cast<float>(i);
  std::ofstream(dir / "raw.bin", std::ios::binary)
      .write(reinterpret_cast<const char*>(bsq.data()), static_cast<std::streamsize>(bsq.size() * sizeof(float)));
  const auto r = run({"convert", "--in", (dir / "raw.bin").string(), "--out", (dir / "cube.spc").string(), "--h", "2",
                      "--w", "3", "--l", "2", "--layout", "bsq", "--normalize"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto cube = mixnet::spectral::read_cube(dir / "cube.spc");
  EXPECT_EQ(cube(0, 0, 0), 0.0);
  EXPECT_EQ(cube(0, 0, 1), 6.0 / 11.0);
  EXPECT_EQ(cube(1, 2, 1), 1.0);
  EXPECT_EQ(cube(1, 0, 0), 3.0 / 11.0);
  const auto short_input = run({"convert", "--in", (dir / "raw.bin").string(), "--out", (dir / "x.spc").string(),
                                "--h", "4", "--w", "3", "--l", "2"});
  EXPECT_EQ(short_input.code, cli::kExitRuntime);
}
