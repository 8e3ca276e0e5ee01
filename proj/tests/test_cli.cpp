// End-to-end runs of the wearbf executable. Exit codes and the one-line JSON
// summary on stdout are part of the interface, so they are checked directly.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  json summary() const { return json::parse(out.substr(0, out.find('\n'))); }
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(WEARBF_CLI_PATH) + " " + args + " --log-level quiet 2>/dev/null";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

/// --help exits before --log-level is consumed, so it gets its own runner.
std::string help(const std::string& sub) {
  std::string text;
  FILE* p = ::popen((std::string(WEARBF_CLI_PATH) + " " + sub + " --help").c_str(), "r");
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) text.append(buf, n);
  ::pclose(p);
  return text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small banks keep the suite quick; the reference size runs in the acceptance binary.
const char* kSmall = "--set n_fft=64";

}  // namespace

TEST(Cli, DesignIsByteIdenticalAcrossRunsAndWorkerCounts) {
  wearbf::test::TempDir dir("cli_design");
  const auto a = run(std::string("design ") + kSmall + " --workers 1 --out " + dir.file("a.bin"));
  const auto b = run(std::string("design ") + kSmall + " --workers 3 --out " + dir.file("b.bin"));
  ASSERT_EQ(a.code, 0) << a.out;
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_EQ(a.summary()["status"], "ok");
  EXPECT_EQ(a.summary()["directions"], 5);
  EXPECT_EQ(a.summary()["bins"], 33);
  EXPECT_EQ(slurp(dir.file("a.bin")), slurp(dir.file("b.bin")));
}

TEST(Cli, PatternWritesOneFilePerHorizontalBeam) {
  wearbf::test::TempDir dir("cli_pattern");
  ASSERT_EQ(run(std::string("design ") + kSmall + " --out " + dir.file("b.bin")).code, 0);
  const auto r = run("pattern --bank " + dir.file("b.bin") + " --freq 1000 --out " + dir.file("pat"));
  ASSERT_EQ(r.code, 0) << r.out;
  // Bins are 250 Hz apart at n_fft = 64, so 1000 Hz is exact.
  EXPECT_DOUBLE_EQ(r.summary()["frequency"].get<double>(), 1000.0);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir.file("pat"))) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  const std::vector<std::string> expect = {"pattern_az_000.00_1000Hz.csv", "pattern_az_090.00_1000Hz.csv",
                                           "pattern_az_180.00_1000Hz.csv", "pattern_az_270.00_1000Hz.csv"};
  EXPECT_EQ(names, expect);
  const auto with_mouth =
      run("pattern --bank " + dir.file("b.bin") + " --include-mouth --format json --out " + dir.file("pj"));
  ASSERT_EQ(with_mouth.code, 0);
  EXPECT_EQ(with_mouth.summary()["files"].size(), 5u);
}

TEST(Cli, VerifyPassesCleanBankAndFlagsCorruptedWeight) {
  wearbf::test::TempDir dir("cli_verify");
  ASSERT_EQ(run(std::string("design ") + kSmall + " --out " + dir.file("b.bin")).code, 0);
  const auto ok = run("verify --bank " + dir.file("b.bin"));
  ASSERT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(ok.summary()["designs"], 5 * 33);
  EXPECT_EQ(ok.summary()["failures"], 0);

  // Double the real part of the first weight of bin 4 (1 kHz) of the first beam.
  std::string bytes = slurp(dir.file("b.bin"));
  const std::size_t payload = bytes.find('\n') + 1;
  const std::size_t at = payload + 4 * 5 * 2 * sizeof(double);
  double v;
  std::memcpy(&v, bytes.data() + at, sizeof v);
  v = 2.0 * v + 0.1;
  std::memcpy(bytes.data() + at, &v, sizeof v);
  std::ofstream(dir.file("bad.bin"), std::ios::binary) << bytes;

  const auto bad = run("verify --bank " + dir.file("bad.bin"));
  EXPECT_EQ(bad.code, 3);
  const auto s = bad.summary();
  EXPECT_EQ(s["status"], "failed");
  EXPECT_EQ(s["failures"], 1);
  const auto first = s["first_failure"].get<std::string>();
  EXPECT_NE(first.find("az+000.00@1000Hz"), std::string::npos) << first;
  EXPECT_NE(first.find("distortionless"), std::string::npos) << first;
}

TEST(Cli, UnknownConfigKeyIsAUsageError) {
  wearbf::test::TempDir dir("cli_key");
  const auto r = run("design --set wng_tolerence=1e-8 --out " + dir.file("b.bin"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.summary()["status"], "error");
  EXPECT_NE(r.summary()["message"].get<std::string>().find("wng_tolerence"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir.file("b.bin")));
}

TEST(Cli, ConfigFileAndOverridesCombine) {
  wearbf::test::TempDir dir("cli_cfg");
  std::ofstream(dir.file("c.json")) << R"({"n_fft": 64, "method": "superdirective"})";
  const auto r = run("design --config " + dir.file("c.json") + " --set method=\"delay_and_sum\" --out " +
                     dir.file("b.bin"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.summary()["method"], "delay_and_sum");
  EXPECT_EQ(r.summary()["bins"], 33);
  EXPECT_EQ(run("design --config " + dir.file("missing.json") + " --out " + dir.file("x.bin")).code, 1);
}

TEST(Cli, MissingOutIsAUsageError) {
  EXPECT_EQ(run("design").code, 1);
  EXPECT_EQ(run("dataset").code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("design --bogus-flag").code, 1);
}

TEST(Cli, MissingInputFileIsADataError) {
  wearbf::test::TempDir dir("cli_data");
  EXPECT_EQ(run("verify --bank " + dir.file("nope.bin")).code, 2);
}

TEST(Cli, HelpListsConfigKeys) {
  const auto text = help("design");
  for (const char* key : {"geometry", "atf_source", "diffuse", "directions", "method", "nulls", "fs", "n_fft",
                          "sound_speed", "wng_tolerance", "wng_margin", "frequencies"})
    EXPECT_NE(text.find(key), std::string::npos) << key;
  EXPECT_NE(help("dataset").find("self_other_overlap"), std::string::npos);
  EXPECT_NE(help("rir").find("interp_taps"), std::string::npos);
}

TEST(Cli, DatasetFeaturizeAndStatsPipeline) {
  wearbf::test::TempDir dir("cli_pipe");
  ASSERT_EQ(run("design --out " + dir.file("b.bin")).code, 0);
  const auto d = run("dataset --set count=3 --set synthetic_clips=4 --seed 5 --out " + dir.file("data"));
  ASSERT_EQ(d.code, 0) << d.out;
  EXPECT_EQ(d.summary()["scenes"], 3);
  const auto manifest = dir.file("data/manifest.jsonl");
  const auto st = run("stats --bank " + dir.file("b.bin") + " --manifest " + manifest + " --out " + dir.file("s.json"));
  ASSERT_EQ(st.code, 0) << st.out;
  EXPECT_EQ(st.summary()["utterances"], 3);
  const auto f = run("featurize --bank " + dir.file("b.bin") + " --in " + manifest + " --stats " +
                     dir.file("s.json") + " --out " + dir.file("feat"));
  ASSERT_EQ(f.code, 0) << f.out;
  EXPECT_EQ(f.summary()["files"], 3);
  EXPECT_EQ(f.summary()["directions"], 5);
  EXPECT_EQ(f.summary()["normalized"], true);
}

TEST(Cli, EnvironmentSeedAppliesUnlessFlagGiven) {
  // Without a room config the room is drawn from the seed.
  wearbf::test::TempDir dir("cli_env");
  ASSERT_EQ(run("rir --seed 3 --out " + dir.file("flag.wav")).code, 0);
  ASSERT_EQ(run("rir --out " + dir.file("env.wav"), "WEARBF_SEED=3").code, 0);
  ASSERT_EQ(run("rir --seed 3 --out " + dir.file("both.wav"), "WEARBF_SEED=9").code, 0);
  ASSERT_EQ(run("rir --seed 9 --out " + dir.file("other.wav")).code, 0);
  EXPECT_EQ(slurp(dir.file("flag.wav")), slurp(dir.file("env.wav")));
  EXPECT_EQ(slurp(dir.file("flag.wav")), slurp(dir.file("both.wav")));
  EXPECT_NE(slurp(dir.file("flag.wav")), slurp(dir.file("other.wav")));
  EXPECT_EQ(run("rir --out " + dir.file("x.wav"), "WEARBF_SEED=abc").code, 1);
}

TEST(Cli, RirFirstArrivalMatchesDirectPath) {
  wearbf::test::TempDir dir("cli_rir");
  const auto r = run("rir --set 'room={\"dimensions\":[6,5,3],\"absorption\":0.5}' --out " + dir.file("r.wav"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.summary()["channels"], 5);
  EXPECT_EQ(r.summary()["first_arrival"], r.summary()["direct_path_sample"]);
}
