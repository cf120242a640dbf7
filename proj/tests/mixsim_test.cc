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
#include <string>

#include "bss/fft.h"
#include "bss/mixsim.h"
#include "bss/signal.h"
#include "doctest.h"

namespace bss {
namespace {

std::string SchemaErrorOf(const std::string& text) {
  try {
    ParseSynthSpec(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

double Energy(const std::vector<double>& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

}  // namespace

TEST_CASE("sources are deterministic, unit energy and spectrally distinct") {
  const auto classes = DefaultClassSpecs();
  const auto a = GenSources(classes, 2.0, 16000, 5);
  const auto b = GenSources(classes, 2.0, 16000, 5);
  const auto c = GenSources(classes, 2.0, 16000, 6);
  REQUIRE(a.size() == 2);
  CHECK(a == b);
  CHECK(a[0] != c[0]);
  for (const auto& s : a) {
    CHECK(s.size() == 32000);
    CHECK(Energy(s) == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(std::abs(SpectralCentroid(a[0], 16000) - SpectralCentroid(a[1], 16000)) >
        500.0);
}

TEST_CASE("class spec validation") {
  SourceClassSpec s;
  s.resonances = {{9000.0, 100.0, std::nullopt}};
  CHECK_THROWS_AS(s.Validate(16000), Error);
  s.resonances = {{1000.0, 100.0, std::nullopt}};
  s.mod_depth = 1.5;
  CHECK_THROWS_AS(s.Validate(16000), Error);
  s.mod_depth = 0.5;
  s.band_mod_depth = -0.1;
  CHECK_THROWS_AS(s.Validate(16000), Error);
  s.band_mod_depth = 0.5;
  CHECK_NOTHROW(s.Validate(16000));
}

TEST_CASE("instantaneous mixing") {
  const std::vector<std::vector<double>> src = {{1.0, 2.0, 3.0}, {-1.0, 0.0, 4.0}};
  const Waveform id = MixInstantaneous(src, Eigen::MatrixXd::Identity(2, 2), 8000);
  CHECK(id.channels == src);
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 2.0, -1.0, 0.25;
  const Waveform m = MixInstantaneous(src, a, 8000);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(m.channels[i][t] == a(i, 0) * src[0][t] + a(i, 1) * src[1][t]);
    }
  }
  CHECK_THROWS_AS(MixInstantaneous(src, Eigen::MatrixXd::Identity(2, 3), 8000),
                  Error);
}

TEST_CASE("one-tap FIR equals instantaneous mixing") {
  const auto src = GenSources(DefaultClassSpecs(), 0.25, 16000, 2);
  const Eigen::MatrixXd a = RandomMixingMatrix(2, 2, 3);
  FirTaps taps(2, std::vector<std::vector<double>>(2));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) taps[i][j] = {a(i, j)};
  }
  CHECK(MixFir(src, taps, 16000).channels ==
        MixInstantaneous(src, a, 16000).channels);
}

TEST_CASE("FIR mixing matches a direct convolution loop") {
  const std::vector<std::vector<double>> src = {{1.0, 0.0, 2.0, -1.0}};
  const FirTaps taps = {{{0.5, 0.25, -1.0}}, {{2.0}}};
  const Waveform m = MixFir(src, taps, 8000);
  const std::vector<double> expect0 = {0.5, 0.25, 0.0, 0.0};
  for (std::size_t t = 0; t < 4; ++t) {
    double acc = 0.0;
    for (std::size_t l = 0; l < 3 && l <= t; ++l) acc += taps[0][0][l] * src[0][t - l];
    CHECK(m.channels[0][t] == acc);
    CHECK(m.channels[1][t] == 2.0 * src[0][t]);
  }
  CHECK(m.channels[0][0] == expect0[0]);
  CHECK(m.channels[0][1] == expect0[1]);
}

TEST_CASE("random mixing matrices are well conditioned and seeded") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd a = RandomMixingMatrix(3, 3, seed);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto s = svd.singularValues();
    CHECK(s(0) / s(2) < 100.0);
    CHECK(a.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(RandomMixingMatrix(3, 3, seed) == a);
  }
}

TEST_CASE("short FIR keeps the narrowband model residual below 5%") {
  SynthSpec spec;
  spec.mode = MixMode::kFir;
  spec.seed = 7;
  const SynthOutput out = Synthesize(spec);
  const std::size_t win = 2048;
  REQUIRE(spec.fir_length <= win / 4);
  RealFft fft(win);
  std::vector<Complex> h_f(fft.NumBins());
  double worst = 0.0;
  for (std::size_t j = 0; j < out.sources.size(); ++j) {
    Waveform dry(1, out.sources[j].size(), spec.sample_rate);
    dry.channels[0] = out.sources[j];
    const ComplexSpectrogram s = Stft(dry);
    const ComplexSpectrogram img = Stft(out.images[j]);
    for (std::size_t i = 0; i < out.images[j].NumChannels(); ++i) {
      std::vector<double> h(win, 0.0);
      std::copy(out.taps[i][j].begin(), out.taps[i][j].end(), h.begin());
      fft.Forward(h, h_f);
      double err = 0.0, total = 0.0;
      for (std::size_t f = 0; f < s.NumBins(); ++f) {
        for (std::size_t n = 0; n < s.NumFrames(); ++n) {
          err += std::norm(img(f, n, i) - h_f[f] * s(f, n, 0));
          total += std::norm(img(f, n, i));
        }
      }
      worst = std::max(worst, std::sqrt(err / total));
    }
  }
  MESSAGE("worst relative narrowband residual " << worst);
  CHECK(worst < 0.05);
}

TEST_CASE("synth spec parsing") {
  SUBCASE("empty object gives the defaults") {
    const SynthSpec s = ParseSynthSpec("{}");
    CHECK(s.sample_rate == 16000);
    CHECK(s.classes.size() == 2);
    CHECK(s.source_classes == std::vector<int>{0, 1});
  }
  SUBCASE("full spec") {
    const SynthSpec s = ParseSynthSpec(R"({
      "schema_version": 1, "sample_rate": 8000, "duration_s": 1.5, "seed": 9,
      "classes": [{"class_id": 4, "mod_rate_hz": 2.0, "mod_depth": 0.3,
                   "band_mod_depth": 0.6,
                   "resonances": [{"center_hz": 500, "bandwidth_hz": 80,
                                   "mod_rate_hz": 7.0}]}],
      "sources": [4, 4],
      "mix": {"mode": "fir", "fir_length": 16}})");
    CHECK(s.sample_rate == 8000);
    CHECK(s.seed == 9);
    REQUIRE(s.classes.size() == 1);
    CHECK(s.classes[0].class_id == 4);
    CHECK(s.classes[0].band_mod_depth == 0.6);
    CHECK(s.classes[0].resonances[0].mod_rate_hz == 7.0);
    CHECK(s.mode == MixMode::kFir);
    CHECK(s.fir_length == 16);
  }
  SUBCASE("errors carry the JSON path") {
    CHECK(SchemaErrorOf("{").rfind("/: malformed JSON", 0) == 0);
    CHECK(SchemaErrorOf(R"({"sample_rate": -1})").rfind("/sample_rate:", 0) == 0);
    CHECK(SchemaErrorOf(R"({"classes": [{"class_id": 0, "resonances": [{"center_hz": 1}]}]})")
              .rfind("/classes/0/resonances/0/bandwidth_hz:", 0) == 0);
    CHECK(SchemaErrorOf(R"({"sources": [0, 5]})").rfind("/sources/1:", 0) == 0);
    CHECK(SchemaErrorOf(R"({"mix": {"mode": "convolutive"}})").rfind("/mix/mode:", 0) == 0);
    CHECK(SchemaErrorOf(R"({"mix": {"matrix": [[1, 0], [0, "x"]]}})")
              .rfind("/mix/matrix/1/1:", 0) == 0);
    CHECK(SchemaErrorOf(R"({"classes": [{"class_id": 0, "mod_depth": 2,
        "resonances": [{"center_hz": 100, "bandwidth_hz": 10}]}]})")
              .rfind("/classes/0:", 0) == 0);
  }
}

TEST_CASE("synthesize returns consistent images") {
  SynthSpec spec;
  spec.duration_s = 0.5;
  spec.seed = 3;
  const SynthOutput out = Synthesize(spec);
  REQUIRE(out.images.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t t = 0; t < out.mixture.Length(); t += 97) {
      CHECK(out.mixture.channels[i][t] ==
            doctest::Approx(out.images[0].channels[i][t] +
                            out.images[1].channels[i][t]).epsilon(1e-12));
    }
  }
  const SynthOutput again = Synthesize(spec);
  CHECK(again.mixture.channels == out.mixture.channels);
}

}  // namespace bss
