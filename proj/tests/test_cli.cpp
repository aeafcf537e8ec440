#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "das3d/cli.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace das3d;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "das3d");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class EnvSeed {
 public:
  explicit EnvSeed(const char* v) { ::setenv("DAS3D_SEED", v, 1); }
  ~EnvSeed() { ::unsetenv("DAS3D_SEED"); }
};

}  // namespace

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(run({"--help"}).code, 0);
  const auto r = run({"synthesize", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--samples-per-pair"), std::string::npos);
}

TEST(Cli, MissingRequiredFlagIsUsageError) {
  const auto r = run({"synthesize", "--output", "x"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--input"), std::string::npos);
}

TEST(Cli, UnknownFlagAndSubcommand) {
  EXPECT_EQ(run({"kernel", "--bogus"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"evaluate", "--pred", "a", "--gt", "b", "--connectivity", "6"}).code, 2);
}

TEST(Cli, InvalidConfigValueIsUsageError) {
  oracle::TempDir in("cli_in"), out("cli_out");
  fixture::write_normal_dataset(in.path(), 1, 32);
  const auto r = run({"synthesize", "--input", in.path().string(), "--output", out.path().string(), "--p-d", "1.5"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, MissingInputDirectoryFails) {
  oracle::TempDir out("cli_out");
  const auto r = run({"validate", (out / "nothing").string()});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, SynthesizeThenValidate) {
  oracle::TempDir in("cli_in"), out("cli_out");
  fixture::write_normal_dataset(in.path(), 2, 32);
  const auto syn = run({"synthesize", "--input", in.path().string(), "--output", out.path().string(), "--seed", "3",
                        "--samples-per-pair", "2", "--workers", "2"});
  ASSERT_EQ(syn.code, 0) << syn.err;
  const auto summary = nlohmann::json::parse(syn.out);
  EXPECT_EQ(summary["samples"], 4);

  const auto manifest = io::load_json(out / "manifest.json");
  EXPECT_EQ(manifest["config"]["seed"], 3);
  const auto ok = run({"validate", out.path().string(), "--normal", in.path().string()});
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_TRUE(nlohmann::json::parse(ok.out)["ok"].get<bool>());

  const auto path = out / manifest["samples"][0]["mask"].get<std::string>();
  auto mask = io::load_mask(path);
  mask(3, 3) = mask(3, 3) ? 0 : 1;
  io::save_mask(path, mask);
  const auto bad = run({"validate", out.path().string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_FALSE(nlohmann::json::parse(bad.out)["ok"].get<bool>());
}

TEST(Cli, KernelDump) {
  oracle::TempDir dir("cli_kernel");
  const auto r = run({"kernel", "--sigma", "2", "--alpha-x", "3", "--out", (dir / "k.pfm").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto info = nlohmann::json::parse(r.out);
  EXPECT_EQ(info["size"], 13);
  EXPECT_NEAR(info["sum"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(info["center_of_mass"][0].get<double>(), 0.0, 1e-9);
  EXPECT_GT(info["center_of_mass"][1].get<double>(), 0.5);
  const auto k = io::load_float_map(dir / "k.pfm");
  EXPECT_EQ(k.height(), 13u);
  EXPECT_EQ(k.width(), 13u);
}

TEST(Cli, ConfigPrecedence) {
  oracle::TempDir dir("cli_cfg");
  io::save_json(dir / "c.json", {{"seed", 20}, {"p_d", 0.25}});
  cli::CliConfig c;
  EXPECT_EQ(cli::detail::synthesis_config(c).seed, SynthesisConfig{}.seed);
  {
    EnvSeed env("10");
    EXPECT_EQ(cli::detail::synthesis_config(c).seed, 10u);
    c.config_file = (dir / "c.json").string();
    const auto from_file = cli::detail::synthesis_config(c);
    EXPECT_EQ(from_file.seed, 20u);
    EXPECT_EQ(from_file.p_d, 0.25);
    c.seed = 30;
    c.p_d = 0.75;
    const auto from_flag = cli::detail::synthesis_config(c);
    EXPECT_EQ(from_flag.seed, 30u);
    EXPECT_EQ(from_flag.p_d, 0.75);
  }
  {
    EnvSeed env("not-a-number");
    cli::CliConfig plain;
    EXPECT_THROW(cli::detail::synthesis_config(plain), Error);
  }
}

TEST(Cli, PreprocessCommand) {
  oracle::TempDir raw("cli_raw"), out("cli_pre");
  for (int i = 0; i < 2; ++i) {
    ToySceneOptions o;
    o.height = o.width = 40;
    o.seed = static_cast<std::uint64_t>(i);
    const auto scene = make_toy_scene(o);
    save_xyz_tiff(raw / "xyz" / ("s" + std::to_string(i) + ".tiff"), scene.grid);
    io::save_rgb(raw / "rgb" / ("s" + std::to_string(i) + ".png"), scene.rgb);
  }
  const auto r = run({"preprocess", "--input", raw.path().string(), "--output", out.path().string(), "--size", "32"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["pairs"], 2);
  EXPECT_TRUE(std::filesystem::exists(out / "preprocess.json"));
  EXPECT_EQ(io::load_depth(out / "depth" / "s1.pfm").height(), 32u);
  EXPECT_EQ(io::load_mask(out / "fg" / "s0.png").width(), 32u);
}

TEST(Cli, EvaluateCommand) {
  oracle::TempDir pred("cli_pred"), gt("cli_gt");
  FloatMap a(2, 2), b(2, 2);
  a(0, 0) = 0.9;
  a(1, 0) = 0.8;
  BinaryMask ga(2, 2);
  ga(0, 0) = ga(1, 0) = 1;
  io::save_float_map(pred / "cat" / "a.pfm", a);
  io::save_float_map(pred / "cat" / "b.pfm", b);
  io::save_mask(gt / "cat" / "a.png", ga);
  const auto report_path = (pred / "report.json").string();
  const auto r = run({"evaluate", "--pred", pred.path().string(), "--gt", gt.path().string(), "--out", report_path});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(r.out);
  EXPECT_EQ(report["iauroc"]["cat"], 1.0);
  EXPECT_EQ(report["pauroc"]["cat"], 1.0);
  EXPECT_NEAR(report["aupro"]["cat"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(io::load_json(report_path), report);

  const auto subset = run({"evaluate", "--pred", pred.path().string(), "--gt", gt.path().string(), "--metrics", "iauroc"});
  ASSERT_EQ(subset.code, 0);
  EXPECT_FALSE(nlohmann::json::parse(subset.out).contains("aupro"));
  EXPECT_EQ(run({"evaluate", "--pred", pred.path().string(), "--gt", gt.path().string(), "--metrics", "f1"}).code, 2);
}
