/* Copyright 2026 The MelGAN-CPP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "melgan/audio.hpp"
#include "melgan/checkpoint.hpp"
#include "melgan/trainer.hpp"

namespace melgan::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kData = MELGAN_TEST_DATA_DIR;

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "melgan");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("melgan_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_tone(const std::string& name, std::size_t n, int rate = 22050) {
    AudioClip clip{std::vector<float>(n), rate};
    for (std::size_t i = 0; i < n; ++i) clip.samples[i] = 0.3f * std::sin(0.05f * static_cast<float>(i));
    const fs::path p = dir_ / name;
    write_wav(p, clip);
    return p;
  }

  fs::path dir_;
};

TEST_F(CliTest, CountParamsGolden) {
  const Result r = run_cli({"count-params", "--json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(json::parse(r.out), json::parse(read_text(kData / "count_params.json")));
  EXPECT_EQ(json::parse(r.out)["generator"]["parameters"], 4265570);
  const Result id = run_cli({"count-params", "--json", "--shortcut", "identity"});
  EXPECT_EQ(json::parse(id.out)["generator"]["parameters"], 4001570);
  const Result table = run_cli({"count-params"});
  EXPECT_NE(table.out.find("4265570"), std::string::npos);
}

TEST_F(CliTest, ValidateArchGoldenAndExitCodes) {
  const Result ok = run_cli({"validate-arch", "--json"});
  EXPECT_EQ(ok.code, kExitOk);
  EXPECT_EQ(json::parse(ok.out), json::parse(read_text(kData / "validate_default.json")));

  const Result bad = run_cli({"validate-arch", "--json", "--kernels", "16,12,4,4", "--dilations", "1,2,4"});
  EXPECT_EQ(bad.code, kExitValidation);
  EXPECT_EQ(json::parse(bad.out), json::parse(read_text(kData / "validate_mutated.json")));

  const Result text = run_cli({"validate-arch", "--kernels", "16,15,4,4"});
  EXPECT_EQ(text.code, kExitValidation);
  EXPECT_EQ(text.out.rfind("FAIL", 0), 0u);
  EXPECT_NE(text.out.find("upsample[1]: kernel not multiple of stride"), std::string::npos);
}

TEST_F(CliTest, MosGolden) {
  const Result r = run_cli({"mos-ci", "--json", "--scores", (kData / "scores.csv").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j, json::parse(read_text(kData / "mos.json")));
  EXPECT_NEAR(j["models"][0]["halfwidth"].get<double>(), 1.386, 1e-3);
  EXPECT_EQ(j["models"][1]["halfwidth"].get<double>(), 0.0);
  const Result table = run_cli({"mos-ci", "--scores", (kData / "scores.csv").string(), "--digits", "3"});
  EXPECT_NE(table.out.find("3.000 ± 1.386"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kExitUsage);
  const Result missing = run_cli({"synth", "--out", "x.wav"});
  EXPECT_EQ(missing.code, kExitUsage);
  EXPECT_EQ(missing.err.rfind("melgan: error: usage: ", 0), 0u);
  EXPECT_EQ(run_cli({"bench", "--repeats", "2"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"synth", "--ckpt", "a", "--out", "b"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, kExitOk);
}

TEST_F(CliTest, SynthMissingCheckpointWritesNothing) {
  const fs::path out = dir_ / "out.wav";
  const fs::path wav = write_tone("in.wav", 2048);
  const Result r = run_cli({"synth", "--ckpt", (dir_ / "none.mgk").string(), "--wav", wav.string(),
                            "--out", out.string()});
  EXPECT_EQ(r.code, kExitIo);
  EXPECT_EQ(r.err.rfind("melgan: error: io: ", 0), 0u);
  EXPECT_FALSE(fs::exists(out));

  std::ofstream(dir_ / "junk.mgk") << "not a checkpoint";
  EXPECT_EQ(run_cli({"synth", "--ckpt", (dir_ / "junk.mgk").string(), "--wav", wav.string(),
                     "--out", out.string()})
                .code,
            kExitIo);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(CliTest, TrainThenSynthesize) {
  const fs::path data = dir_ / "data";
  fs::create_directories(data);
  write_tone("data/a.wav", 3000);
  write_tone("data/b.wav", 1500);
  const fs::path run = dir_ / "run";
  const std::string cfg = (kData / "tiny_train.cfg").string();

  const Result r = run_cli({"train", "--data", data.string(), "--out", run.string(), "--steps", "2",
                            "--config", cfg, "--seed", "3", "--threads", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("train: lr=0.0001 beta1=0.5 beta2=0.9 batch=2 lambda_fm=10 window=1024 seed=3", 0), 0u)
      << r.out;
  EXPECT_NE(r.out.find(kMetricsHeader), std::string::npos);
  ASSERT_TRUE(fs::exists(run / "checkpoint.mgk"));

  // Resume to step 3 and compare against a straight three-step run.
  const Result more = run_cli({"train", "--data", data.string(), "--out", run.string(), "--steps", "3",
                               "--config", cfg, "--seed", "3", "--resume", "--quiet", "--threads", "1"});
  ASSERT_EQ(more.code, kExitOk) << more.err;
  EXPECT_NE(more.out.find("resumed_at=2"), std::string::npos);
  const Result straight = run_cli({"train", "--data", data.string(), "--out", (dir_ / "straight").string(),
                                   "--steps", "3", "--config", cfg, "--seed", "3", "--json",
                                   "--threads", "1"});
  ASSERT_EQ(straight.code, kExitOk) << straight.err;
  EXPECT_EQ(read_file_bytes(run / "checkpoint.mgk"), read_file_bytes(dir_ / "straight" / "checkpoint.mgk"));

  // Analysis-synthesis and the mel-file route agree.
  const fs::path wav = write_tone("speech.wav", 256 * 6);
  const Result s1 = run_cli({"synth", "--ckpt", (run / "checkpoint.mgk").string(), "--wav", wav.string(),
                             "--out", (dir_ / "a.wav").string()});
  ASSERT_EQ(s1.code, kExitOk) << s1.err;
  const fs::path mel = dir_ / "speech.mel";
  const Result m = run_cli({"mel", "--wav", wav.string(), "--out", mel.string(), "--config", cfg, "--json"});
  ASSERT_EQ(m.code, kExitOk) << m.err;
  EXPECT_EQ(json::parse(m.out)["frames"], 6);
  const Result s2 = run_cli({"synth", "--ckpt", (run / "checkpoint.mgk").string(), "--mel", mel.string(),
                             "--out", (dir_ / "b.wav").string(), "--json"});
  ASSERT_EQ(s2.code, kExitOk) << s2.err;
  EXPECT_EQ(json::parse(s2.out)["samples"], 256 * 6);
  EXPECT_EQ(read_wav(dir_ / "a.wav").samples, read_wav(dir_ / "b.wav").samples);

  // Mel settings that disagree with the checkpoint are a validation error.
  const Result wide = run_cli({"mel", "--wav", wav.string(), "--out", (dir_ / "wide.mel").string()});
  ASSERT_EQ(wide.code, kExitOk);
  EXPECT_EQ(run_cli({"synth", "--ckpt", (run / "checkpoint.mgk").string(), "--mel",
                     (dir_ / "wide.mel").string(), "--out", (dir_ / "c.wav").string()})
                .code,
            kExitValidation);
  const fs::path slow = write_tone("slow.wav", 2048, 16000);
  EXPECT_EQ(run_cli({"synth", "--ckpt", (run / "checkpoint.mgk").string(), "--wav", slow.string(),
                     "--out", (dir_ / "d.wav").string()})
                .code,
            kExitValidation);
}

TEST_F(CliTest, TrainRejectsBadInputs) {
  EXPECT_EQ(run_cli({"train", "--data", (dir_ / "missing").string(), "--out", (dir_ / "o").string(),
                     "--steps", "1", "--config", (kData / "tiny_train.cfg").string()})
                .code,
            kExitIo);
  fs::create_directories(dir_ / "d");
  write_tone("d/a.wav", 2000);
  EXPECT_EQ(run_cli({"train", "--data", (dir_ / "d").string(), "--out", (dir_ / "o").string(),
                     "--steps", "1", "--config", (kData / "tiny_train.cfg").string(), "--window", "1000"})
                .code,
            kExitValidation);
}

TEST_F(CliTest, BenchJson) {
  const Result r = run_cli({"bench", "--json", "--frames", "8", "--repeats", "3"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["samples_generated"], 2048);
  EXPECT_EQ(j["threads"], 1);
  EXPECT_DOUBLE_EQ(j["reference_khz"].get<double>(), 51.9);
  EXPECT_GT(j["khz"].get<double>(), 0.0);
}

TEST(ResolveThreads, EnvironmentCap) {
  ::setenv("MELGAN_THREADS", "2", 1);
  EXPECT_EQ(resolve_threads(8), 2);
  EXPECT_EQ(resolve_threads(1), 1);
  ::unsetenv("MELGAN_THREADS");
  EXPECT_EQ(resolve_threads(3), 3);
  EXPECT_GE(resolve_threads(0), 1);
}

}  // namespace
}  // namespace melgan::cli
