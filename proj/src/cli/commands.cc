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

#include "bss/cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <sstream>

#include "bss/lgm.h"
#include "bss/log.h"
#include "bss/mixsim.h"
#include "bss/neural/chimera.h"
#include "bss/nmf_model.h"
#include "bss/oracle_model.h"
#include "bss/signal.h"
#include "json.hpp"

namespace bss::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kReportSchemaVersion = 1;

std::string ReadText(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

Waveform Mono(const std::vector<double>& samples, int rate) {
  Waveform w;
  w.sample_rate = rate;
  w.channels = {samples};
  return w;
}

// Zero-pads the tail so the last frame ends exactly at the signal end and no
// samples are dropped by the STFT framing.
Waveform PadToFrames(Waveform w, const StftConfig& cfg) {
  const std::size_t len = w.Length();
  std::size_t padded = std::max(len, cfg.win_len);
  const std::size_t rem = (padded - cfg.win_len) % cfg.hop;
  if (rem != 0) padded += cfg.hop - rem;
  for (auto& ch : w.channels) ch.resize(padded, 0.0);
  return w;
}

bool AllFinite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

// Files named <prefix><index>.wav in dir, ordered by index.
std::vector<fs::path> IndexedWavs(const fs::path& dir,
                                  const std::string& prefix) {
  std::vector<std::pair<int, fs::path>> found;
  if (!fs::is_directory(dir)) throw Error(dir.string() + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) != 0 || entry.path().extension() != ".wav") {
      continue;
    }
    const std::string digits =
        name.substr(prefix.size(), name.size() - prefix.size() - 4);
    if (digits.empty() ||
        !std::all_of(digits.begin(), digits.end(),
                     [](unsigned char c) { return std::isdigit(c); })) {
      continue;
    }
    found.emplace_back(std::stoi(digits), entry.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [idx, path] : found) out.push_back(std::move(path));
  return out;
}

std::vector<double> ReadMono(const fs::path& path) {
  Waveform w = ReadWav(path.string());
  if (w.NumChannels() == 0) throw Error(path.string() + " has no channels");
  return std::move(w.channels[0]);
}

std::unique_ptr<SourceModel> MakeModel(Algorithm algo,
                                       const ComplexSpectrogram& x,
                                       const RunConfig& cfg) {
  const std::size_t num_src = x.NumChannels();
  switch (algo) {
    case Algorithm::kIlrma:
      return std::make_unique<NmfSourceModel>(
          num_src, x.NumBins(), x.NumFrames(),
          static_cast<std::size_t>(cfg.bases), cfg.seed, false);
    case Algorithm::kIva:
      return std::make_unique<NmfSourceModel>(num_src, x.NumBins(),
                                              x.NumFrames(), 1, cfg.seed, true);
    case Algorithm::kFastMvae2: {
      auto bundle = std::make_shared<const neural::ModelBundle>(
          neural::LoadModel(cfg.model_path));
      if (static_cast<std::size_t>(bundle->freq_bins) != x.NumBins()) {
        throw Error("model " + cfg.model_path + " expects " +
                    std::to_string(bundle->freq_bins) +
                    " frequency bins, the STFT gives " +
                    std::to_string(x.NumBins()));
      }
      return std::make_unique<neural::NeuralSourceModel>(
          std::move(bundle), num_src,
          neural::PoeConfig{cfg.alpha, cfg.amp_norm});
    }
    case Algorithm::kOracle: {
      const auto files = IndexedWavs(cfg.refs_dir, "src_");
      if (files.size() != num_src) {
        throw Error("oracle needs " + std::to_string(num_src) +
                    " src_<j>.wav files in " + cfg.refs_dir + ", found " +
                    std::to_string(files.size()));
      }
      std::vector<std::vector<double>> variances;
      for (const fs::path& p : files) {
        Waveform w = ReadWav(p.string());
        const StftConfig sc{x.WinLen(), x.Hop()};
        const ComplexSpectrogram s = Stft(PadToFrames(std::move(w), sc), sc);
        if (s.NumFrames() != x.NumFrames()) {
          throw Error(p.string() + " does not match the mixture length");
        }
        variances.push_back(PowerSpectrogram(s));
      }
      return std::make_unique<OracleSourceModel>(std::move(variances));
    }
  }
  throw Error("unknown algorithm");
}

}  // namespace

Algorithm ParseAlgorithm(const std::string& name) {
  if (name == "ilrma") return Algorithm::kIlrma;
  if (name == "iva") return Algorithm::kIva;
  if (name == "fastmvae2") return Algorithm::kFastMvae2;
  if (name == "oracle") return Algorithm::kOracle;
  throw Error("unknown algorithm '" + name +
              "' (expected ilrma, iva, fastmvae2 or oracle)");
}

std::string ToString(Algorithm algo) {
  switch (algo) {
    case Algorithm::kIlrma: return "ilrma";
    case Algorithm::kIva: return "iva";
    case Algorithm::kFastMvae2: return "fastmvae2";
    case Algorithm::kOracle: return "oracle";
  }
  return "?";
}

void RunConfig::Validate() const {
  if (iters < 0) throw Error("--iters must be >= 0");
  if (!(alpha >= 0.0)) throw Error("--alpha must be >= 0");
  if (algo == Algorithm::kFastMvae2 && model_path.empty()) {
    throw Error("--algo fastmvae2 requires --model");
  }
  if (algo == Algorithm::kOracle && refs_dir.empty()) {
    throw Error("--algo oracle requires --refs");
  }
  if (algo == Algorithm::kIlrma && bases < 1) throw Error("--bases must be >= 1");
  if (threads < 1) throw Error("--threads must be >= 1");
}

void CmdSynth(const std::string& spec_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed) {
  SynthSpec spec =
      spec_path.empty() ? SynthSpec{} : ParseSynthSpec(ReadText(spec_path));
  if (seed) spec.seed = *seed;
  const SynthOutput out = Synthesize(spec);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  WriteWav((dir / "mixture.wav").string(), out.mixture);
  json meta;
  meta["schema_version"] = kReportSchemaVersion;
  meta["sample_rate"] = spec.sample_rate;
  meta["duration_s"] = spec.duration_s;
  meta["seed"] = spec.seed;
  meta["source_classes"] = spec.source_classes;
  meta["mode"] = spec.mode == MixMode::kInstantaneous ? "instantaneous" : "fir";
  if (spec.mode == MixMode::kInstantaneous) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < out.mixing.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < out.mixing.cols(); ++j) {
        row.push_back(out.mixing(i, j));
      }
      rows.push_back(row);
    }
    meta["matrix"] = rows;
  } else {
    meta["fir_length"] = out.taps.front().front().size();
  }
  meta["files"] = {{"mixture", "mixture.wav"}};
  for (std::size_t j = 0; j < out.sources.size(); ++j) {
    const std::string ref = "ref_" + std::to_string(j) + ".wav";
    const std::string src = "src_" + std::to_string(j) + ".wav";
    WriteWav((dir / ref).string(),
             Mono(out.images[j].channels[0], spec.sample_rate));
    WriteWav((dir / src).string(), Mono(out.sources[j], spec.sample_rate));
    meta["files"]["references"].push_back(ref);
    meta["files"]["sources"].push_back(src);
  }
  WriteText(dir / "meta.json", meta.dump(2));
}

std::string SeparateReport::ToJson() const {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["algo"] = algo;
  j["iters"] = iters;
  j["neg_loglik"] = neg_loglik;
  j["iter_seconds"] = iter_seconds;
  j["outputs"] = outputs;
  return j.dump(2);
}

SeparateReport CmdSeparate(const RunConfig& cfg) {
  cfg.Validate();
  const Waveform mix = ReadWav(cfg.input);
  const StftConfig stft_cfg =
      StftConfig::FromMs(cfg.win_ms, cfg.hop, mix.sample_rate);
  const ComplexSpectrogram x = Stft(PadToFrames(mix, stft_cfg), stft_cfg);
  BSS_LOG(1) << "separating " << cfg.input << ": " << x.NumChannels()
             << " channels, " << x.NumBins() << " bins, " << x.NumFrames()
             << " frames";
  auto model = MakeModel(cfg.algo, x, cfg);
  SeparateOptions opts;
  opts.iters = cfg.iters;
  opts.seed = cfg.seed;
  opts.threads = cfg.threads;
  const SeparationResult result = Separate(x, *model, opts);

  if (!AllFinite(result.neg_loglik)) {
    throw Error("likelihood trace contains non-finite values");
  }
  Waveform est = Istft(result.sources);
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  SeparateReport report;
  report.algo = ToString(cfg.algo);
  report.iters = cfg.iters;
  report.neg_loglik = result.neg_loglik;
  report.iter_seconds = result.iter_seconds;
  for (std::size_t j = 0; j < est.NumChannels(); ++j) {
    std::vector<double> y = std::move(est.channels[j]);
    y.resize(mix.Length(), 0.0);
    if (!AllFinite(y)) throw Error("separated source " + std::to_string(j) +
                                   " is not finite");
    const std::string name = "est_" + std::to_string(j) + ".wav";
    WriteWav((dir / name).string(), Mono(y, mix.sample_rate));
    report.outputs.push_back(name);
  }
  WriteText(dir / "report.json", report.ToJson());
  return report;
}

EvalReport CmdEval(const std::string& est_dir, const std::string& ref_dir,
                   const std::string& mix_path) {
  const auto est_files = IndexedWavs(est_dir, "est_");
  const auto ref_files = IndexedWavs(ref_dir, "ref_");
  if (ref_files.empty()) throw Error("no ref_<j>.wav files in " + ref_dir);
  std::vector<std::vector<double>> ests, refs;
  for (const auto& p : est_files) ests.push_back(ReadMono(p));
  for (const auto& p : ref_files) refs.push_back(ReadMono(p));
  const std::size_t len = refs.front().size();
  for (auto& e : ests) e.resize(len, 0.0);

  fs::path mix = mix_path;
  if (mix.empty() && fs::exists(fs::path(ref_dir) / "mixture.wav")) {
    mix = fs::path(ref_dir) / "mixture.wav";
  }
  if (mix.empty()) return PermuteAlign(ests, refs);
  std::vector<double> mixture = ReadMono(mix);
  mixture.resize(len, 0.0);
  return Evaluate(ests, refs, mixture);
}

std::string BenchReport::ToJson() const {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["rows"] = json::array();
  for (const BenchRow& r : rows) {
    j["rows"].push_back({{"sources", r.sources},
                         {"algo", r.algo},
                         {"mean_s", r.mean_s},
                         {"min_s", r.min_s},
                         {"max_s", r.max_s}});
  }
  return j.dump(2);
}

std::string BenchReport::ToText() const {
  std::ostringstream os;
  os << "per-iteration time [s]\n";
  os << std::setw(3) << "J" << "  " << std::left << std::setw(10) << "algo"
     << std::right << std::setw(12) << "mean" << std::setw(12) << "min"
     << std::setw(12) << "max" << '\n';
  os << std::scientific << std::setprecision(3);
  for (const BenchRow& r : rows) {
    os << std::setw(3) << r.sources << "  " << std::left << std::setw(10)
       << r.algo << std::right << std::setw(12) << r.mean_s << std::setw(12)
       << r.min_s << std::setw(12) << r.max_s << '\n';
  }
  for (const BenchRow& fast : rows) {
    if (fast.algo != "fastmvae2" || fast.sources <= 3) continue;
    for (const BenchRow& base : rows) {
      if (base.algo != "ilrma" || base.sources != fast.sources) continue;
      os << "J=" << fast.sources
         << ": fastmvae2 faster than ilrma per iteration: "
         << (fast.mean_s < base.mean_s ? "yes" : "no") << " ("
         << fast.mean_s << " s vs " << base.mean_s << " s)\n";
    }
  }
  return os.str();
}

BenchReport CmdBench(const BenchConfig& cfg) {
  if (cfg.iters < 1) throw Error("benchmark needs at least one iteration");
  BenchReport report;
  for (int num_src : cfg.source_counts) {
    if (num_src < 2) throw Error("benchmark source counts must be >= 2");
    SynthSpec spec;
    spec.seed = cfg.seed;
    spec.duration_s = cfg.duration_s;
    spec.source_classes.clear();
    for (int j = 0; j < num_src; ++j) {
      spec.source_classes.push_back(
          spec.classes[static_cast<std::size_t>(j) % spec.classes.size()]
              .class_id);
    }
    const SynthOutput synth = Synthesize(spec);
    const ComplexSpectrogram x = Stft(synth.mixture, cfg.win_ms, cfg.hop);
    for (Algorithm algo : cfg.algos) {
      RunConfig run;
      run.algo = algo;
      run.model_path = cfg.model_path;
      run.seed = cfg.seed;
      run.threads = cfg.threads;
      run.iters = cfg.iters;
      run.Validate();
      auto model = MakeModel(algo, x, run);
      SeparateOptions opts;
      opts.iters = cfg.iters;
      opts.seed = cfg.seed;
      opts.threads = cfg.threads;
      const SeparationResult result = Separate(x, *model, opts);
      const auto& t = result.iter_seconds;
      BenchRow row;
      row.sources = num_src;
      row.algo = ToString(algo);
      row.mean_s = std::accumulate(t.begin(), t.end(), 0.0) /
                   static_cast<double>(t.size());
      row.min_s = *std::min_element(t.begin(), t.end());
      row.max_s = *std::max_element(t.begin(), t.end());
      BSS_LOG(1) << "bench J=" << num_src << " " << row.algo << " mean "
                 << row.mean_s << " s";
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace bss::cli
