// Copyright 2026 The lgmsep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "bss/cli.h"
#include "bss/signal.h"
#include "doctest.h"
#include "json.hpp"
#include "test_util.h"

namespace bss::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kShortSpec[] = R"({"duration_s": 1.0, "seed": 4})";

std::string WriteSpec(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "spec.json";
  std::ofstream(p) << text;
  return p.string();
}

json ReadJson(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string ReadText(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the bss binary; returns its exit status with stderr in `err`.
int RunCli(const std::string& args, std::string* err = nullptr) {
  const fs::path log = testing::TempDir("cli_err") / "stderr.txt";
  const std::string cmd =
      std::string(BSS_CLI_PATH) + " " + args + " >/dev/null 2>" + log.string();
  const int status = std::system(cmd.c_str());
  if (err != nullptr) *err = ReadText(log);
  return WEXITSTATUS(status);
}

fs::path SynthShort(const std::string& tag) {
  const fs::path dir = testing::TempDir(tag);
  CmdSynth(WriteSpec(dir, kShortSpec), (dir / "data").string());
  return dir / "data";
}

}  // namespace

TEST_CASE("synth writes the mixture, references and metadata") {
  const fs::path dir = testing::TempDir("synth");
  const std::string spec = WriteSpec(dir, kShortSpec);
  CmdSynth(spec, (dir / "a").string());
  CmdSynth(spec, (dir / "b").string());
  for (const char* name : {"mixture.wav", "ref_0.wav", "ref_1.wav",
                           "src_0.wav", "src_1.wav", "meta.json"}) {
    CHECK(fs::exists(dir / "a" / name));
    CHECK(ReadText(dir / "a" / name) == ReadText(dir / "b" / name));
  }
  const Waveform mix = ReadWav((dir / "a" / "mixture.wav").string());
  CHECK(mix.NumChannels() == 2);
  CHECK(mix.Length() == 16000);
  CHECK(ReadJson(dir / "a" / "meta.json")["source_classes"] ==
        json::array({0, 1}));

  CmdSynth(spec, (dir / "c").string(), 5);
  CHECK(ReadText(dir / "c" / "mixture.wav") !=
        ReadText(dir / "a" / "mixture.wav"));
}

TEST_CASE("synth rejects malformed specs with a schema error") {
  const fs::path dir = testing::TempDir("synth_bad");
  const std::string spec = WriteSpec(dir, R"({"duration_s": "long"})");
  CHECK_THROWS_WITH_AS(CmdSynth(spec, (dir / "o").string()),
                       doctest::Contains("/duration_s"), Error);
  std::string err;
  CHECK(RunCli("synth --spec " + spec + " --out " + (dir / "o").string(),
               &err) != 0);
  CHECK(err.find("/duration_s") != std::string::npos);
}

TEST_CASE("separate with ilrma and iva writes estimates and a trace") {
  const fs::path data = SynthShort("sep");
  for (Algorithm algo : {Algorithm::kIlrma, Algorithm::kIva}) {
    RunConfig cfg;
    cfg.input = (data / "mixture.wav").string();
    cfg.out_dir = (data / ToString(algo)).string();
    cfg.algo = algo;
    cfg.iters = 5;
    const SeparateReport r = CmdSeparate(cfg);
    CHECK(r.neg_loglik.size() == 5);
    CHECK(r.iter_seconds.size() == 5);
    for (double v : r.neg_loglik) CHECK(std::isfinite(v));
    const Waveform est = ReadWav(cfg.out_dir + "/est_0.wav");
    CHECK(est.Length() == 16000);
    const json rep = ReadJson(fs::path(cfg.out_dir) / "report.json");
    CHECK(rep["algo"] == ToString(algo));
    CHECK(rep["outputs"].size() == 2);
  }
}

TEST_CASE("separate with zero iterations passes the channels through") {
  const fs::path data = SynthShort("sep0");
  RunConfig cfg;
  cfg.input = (data / "mixture.wav").string();
  cfg.out_dir = (data / "out").string();
  cfg.iters = 0;
  CmdSeparate(cfg);
  const Waveform mix = ReadWav(cfg.input);
  for (std::size_t j = 0; j < 2; ++j) {
    const Waveform est =
        ReadWav(cfg.out_dir + "/est_" + std::to_string(j) + ".wav");
    double err = 0.0, total = 0.0;
    for (std::size_t t = 0; t < mix.Length(); ++t) {
      err += std::pow(est.channels[0][t] - mix.channels[j][t], 2);
      total += std::pow(mix.channels[j][t], 2);
    }
    CHECK(err / total < 1e-8);
  }
}

TEST_CASE("separate with the fixture model gives a finite trace") {
  const fs::path data = SynthShort("sepnn");
  RunConfig cfg;
  cfg.input = (data / "mixture.wav").string();
  cfg.out_dir = (data / "out").string();
  cfg.algo = Algorithm::kFastMvae2;
  cfg.model_path = testing::FixturePath("toy_chimera.cavw");
  cfg.iters = 3;
  const SeparateReport r = CmdSeparate(cfg);
  REQUIRE(r.neg_loglik.size() == 3);
  for (double v : r.neg_loglik) CHECK(std::isfinite(v));
}

TEST_CASE("separate argument errors") {
  RunConfig cfg;
  cfg.algo = Algorithm::kFastMvae2;
  CHECK_THROWS_AS(cfg.Validate(), Error);
  cfg.algo = Algorithm::kIlrma;
  cfg.iters = -1;
  CHECK_THROWS_AS(cfg.Validate(), Error);
  cfg.iters = 1;
  cfg.alpha = -0.5;
  CHECK_THROWS_AS(cfg.Validate(), Error);
  CHECK_THROWS_AS(ParseAlgorithm("ica"), Error);
  CHECK(ParseAlgorithm("fastmvae2") == Algorithm::kFastMvae2);
  const fs::path dir = testing::TempDir("sep_bad");
  CHECK(RunCli("separate " + (dir / "missing.wav").string() + " --out " +
               (dir / "o").string()) != 0);
}

TEST_CASE("eval scores references, shuffles and known noise") {
  const fs::path data = SynthShort("eval");
  const fs::path est = data / "est";
  fs::create_directories(est);
  SUBCASE("references against themselves are +inf") {
    for (int j = 0; j < 2; ++j) {
      fs::copy_file(data / ("ref_" + std::to_string(j) + ".wav"),
                    est / ("est_" + std::to_string(j) + ".wav"));
    }
    const EvalReport r =
        CmdEval(est.string(), data.string(), (data / "mixture.wav").string());
    for (double s : r.si_sdr) CHECK(std::isinf(s));
    CHECK(r.permutation == std::vector<std::size_t>{0, 1});
    CHECK(r.input_si_sdr.size() == 2);
  }
  SUBCASE("swapped estimates report the permutation") {
    fs::copy_file(data / "ref_0.wav", est / "est_1.wav");
    fs::copy_file(data / "ref_1.wav", est / "est_0.wav");
    const EvalReport r = CmdEval(est.string(), data.string());
    CHECK(r.permutation == std::vector<std::size_t>{1, 0});
    CHECK(r.input_si_sdr.size() == 2);
  }
  SUBCASE("added noise at 100:1 reads as about 20 dB") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int j = 0; j < 2; ++j) {
      Waveform w = ReadWav((data / ("ref_" + std::to_string(j) + ".wav")).string());
      double e = 0.0;
      for (double v : w.channels[0]) e += v * v;
      const double sigma = std::sqrt(e / 100.0 / w.Length());
      for (double& v : w.channels[0]) v += sigma * n(rng);
      WriteWav((est / ("est_" + std::to_string(j) + ".wav")).string(), w);
    }
    const EvalReport r = CmdEval(est.string(), data.string());
    for (double s : r.si_sdr) CHECK(s == doctest::Approx(20.0).epsilon(0.02));
  }
}

TEST_CASE("bench reports positive timings that grow with the source count") {
  BenchConfig cfg;
  cfg.source_counts = {2, 4};
  cfg.algos = {Algorithm::kIlrma, Algorithm::kFastMvae2};
  cfg.model_path = testing::FixturePath("toy_chimera.cavw");
  cfg.iters = 2;
  cfg.duration_s = 1.0;
  const BenchReport r = CmdBench(cfg);
  REQUIRE(r.rows.size() == 4);
  for (const BenchRow& row : r.rows) {
    CHECK(row.mean_s > 0.0);
    CHECK(row.min_s <= row.mean_s);
    CHECK(row.mean_s <= row.max_s);
  }
  for (const char* algo : {"ilrma", "fastmvae2"}) {
    double t2 = 0.0, t4 = 0.0;
    for (const BenchRow& row : r.rows) {
      if (row.algo != algo) continue;
      (row.sources == 2 ? t2 : t4) = row.mean_s;
    }
    CHECK(t4 > t2);
  }
  CHECK(r.ToText().find("J=4: fastmvae2 faster than ilrma") != std::string::npos);
  CHECK(json::parse(r.ToJson())["rows"].size() == 4);
}

}  // namespace bss::cli
