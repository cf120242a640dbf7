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

#ifndef BSS_MIXSIM_H_
#define BSS_MIXSIM_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bss/signal.h"

namespace bss {

struct Resonance {
  double center_hz = 0.0;
  double bandwidth_hz = 0.0;
  // Modulation rate of this band; the class rate when unset.
  std::optional<double> mod_rate_hz;
};

// A parametric "speaker class": Gaussian-shaped spectral resonances under a
// shared raised-sine amplitude modulation. Resonances with their own rate
// are further modulated by a band-specific raised sine.
struct SourceClassSpec {
  int class_id = 0;
  std::vector<Resonance> resonances;
  double mod_rate_hz = 3.0;
  double mod_depth = 0.9;
  // Depth of the per-resonance modulation, for resonances with a rate.
  double band_mod_depth = 0.8;

  void Validate(int sample_rate) const;
};

// Two classes with low (class 0) and high (class 1) formant regions.
std::vector<SourceClassSpec> DefaultClassSpecs();

// Unit-energy filtered-noise sources, one per entry of `classes`.
std::vector<std::vector<double>> GenSources(
    const std::vector<SourceClassSpec>& classes, double duration_s,
    int sample_rate, std::uint64_t seed);

// Power-weighted mean frequency of a real signal, in Hz.
double SpectralCentroid(const std::vector<double>& x, int sample_rate);

enum class MixMode { kInstantaneous, kFir };

// taps[i][j] is the impulse response from source j to microphone i.
using FirTaps = std::vector<std::vector<std::vector<double>>>;

Waveform MixInstantaneous(const std::vector<std::vector<double>>& sources,
                          const Eigen::MatrixXd& mixing, int sample_rate);
Waveform MixFir(const std::vector<std::vector<double>>& sources,
                const FirTaps& taps, int sample_rate);

// Random mixing matrix with entries in [-1, 1], redrawn until its condition
// number is below max_cond.
Eigen::MatrixXd RandomMixingMatrix(std::size_t mics, std::size_t sources,
                                   std::uint64_t seed, double max_cond = 100.0);

// Direct path from RandomMixingMatrix plus an exponentially decaying random
// tail of `length` taps.
FirTaps RandomFirTaps(std::size_t mics, std::size_t sources,
                      std::size_t length, std::uint64_t seed);

// Everything needed to synthesize one mixture; the JSON form is documented
// in README.md.
struct SynthSpec {
  int sample_rate = 16000;
  double duration_s = 4.0;
  std::uint64_t seed = 0;
  std::vector<SourceClassSpec> classes = DefaultClassSpecs();
  std::vector<int> source_classes = {0, 1};
  MixMode mode = MixMode::kInstantaneous;
  Eigen::MatrixXd mixing;  // empty: drawn from the seed
  FirTaps taps;            // empty: drawn from the seed
  std::size_t fir_length = 64;
};

// Parses the JSON mix spec. Schema violations throw an Error whose message
// starts with the JSON pointer of the offending field.
SynthSpec ParseSynthSpec(const std::string& json_text);

struct SynthOutput {
  Waveform mixture;                           // I channels
  std::vector<std::vector<double>> sources;   // dry, unit energy
  std::vector<Waveform> images;               // per source, I channels
  Eigen::MatrixXd mixing;                     // instantaneous only
  FirTaps taps;                               // FIR only
};

SynthOutput Synthesize(const SynthSpec& spec);

}  // namespace bss

#endif  // BSS_MIXSIM_H_
