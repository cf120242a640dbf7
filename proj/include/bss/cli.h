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

#ifndef BSS_CLI_H_
#define BSS_CLI_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bss/metrics.h"

namespace bss::cli {

enum class Algorithm { kIlrma, kIva, kFastMvae2, kOracle };

Algorithm ParseAlgorithm(const std::string& name);
std::string ToString(Algorithm algo);

struct RunConfig {
  std::string input;       // mixture WAV
  std::string out_dir;
  std::string model_path;  // fastmvae2
  std::string refs_dir;    // oracle: directory holding src_<j>.wav
  Algorithm algo = Algorithm::kIlrma;
  int iters = 60;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double win_ms = 128.0;
  double hop = 0.5;
  int threads = 1;
  bool amp_norm = false;
  int bases = 2;

  // Throws on iters < 0, alpha < 0, or fastmvae2 without a model.
  void Validate() const;
};

// Writes mixture.wav, ref_<j>.wav (source image at mic 0), src_<j>.wav (dry
// source) and meta.json into out_dir. An empty spec path uses the defaults.
// A seed, when given, overrides the spec's.
void CmdSynth(const std::string& spec_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed = std::nullopt);

struct SeparateReport {
  std::string algo;
  int iters = 0;
  std::vector<double> neg_loglik;
  std::vector<double> iter_seconds;
  std::vector<std::string> outputs;

  std::string ToJson() const;
};

// Separates cfg.input and writes est_<j>.wav plus report.json to out_dir.
SeparateReport CmdSeparate(const RunConfig& cfg);

// Scores est_<j>.wav in est_dir against ref_<j>.wav in ref_dir. The input
// SI-SDR uses channel 0 of mix_path, or ref_dir/mixture.wav when present.
EvalReport CmdEval(const std::string& est_dir, const std::string& ref_dir,
                   const std::string& mix_path = "");

struct BenchConfig {
  std::vector<int> source_counts = {2, 3, 6};
  std::vector<Algorithm> algos = {Algorithm::kIlrma, Algorithm::kFastMvae2};
  std::string model_path;
  int iters = 10;
  double duration_s = 4.0;
  double win_ms = 128.0;
  double hop = 0.5;
  int threads = 1;
  std::uint64_t seed = 0;
};

struct BenchRow {
  int sources = 0;
  std::string algo;
  double mean_s = 0.0;
  double min_s = 0.0;
  double max_s = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  std::string ToJson() const;
  // Aligned table plus one line per J > 3 stating whether fastmvae2 ran
  // faster per iteration than ilrma.
  std::string ToText() const;
};

BenchReport CmdBench(const BenchConfig& cfg);

}  // namespace bss::cli

#endif  // BSS_CLI_H_
