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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include "bss/lgm.h"
#include "bss/mixsim.h"
#include "bss/neural/bundle.h"
#include "bss/neural/chimera.h"
#include "bss/neural/kernels.h"
#include "bss/signal.h"
#include "doctest.h"
#include "json.hpp"
#include "neural_oracle.h"
#include "test_util.h"

namespace bss::neural {
namespace {

using testing::MaxAbsDiff;
using testing::RandomActivations;
using testing::RandomLayer;
using testing::TinyBundle;

std::vector<char> ReadBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string ErrorOf(const std::vector<char>& bytes) {
  try {
    ParseModel(bytes);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

Activations FromJson(const nlohmann::json& j) {
  Activations a(static_cast<Eigen::Index>(j.size()),
                static_cast<Eigen::Index>(j[0].size()));
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = j[r][c].get<double>();
  }
  return a;
}

void CheckClose(const Activations& got, const Activations& want, double rel) {
  REQUIRE(got.rows() == want.rows());
  REQUIRE(got.cols() == want.cols());
  for (Eigen::Index r = 0; r < got.rows(); ++r) {
    for (Eigen::Index c = 0; c < got.cols(); ++c) {
      CHECK(std::abs(got(r, c) - want(r, c)) <=
            rel * std::max(1.0, std::abs(want(r, c))));
    }
  }
}

SourceSpectrogram ToSource(const ComplexSpectrogram& x, std::size_t ch) {
  SourceSpectrogram y{x.NumBins(), x.NumFrames(), {}};
  y.data.resize(x.NumBins() * x.NumFrames());
  for (std::size_t f = 0; f < x.NumBins(); ++f) {
    for (std::size_t n = 0; n < x.NumFrames(); ++n) {
      y.data[f * x.NumFrames() + n] = x(f, n, ch);
    }
  }
  return y;
}

}  // namespace

TEST_CASE("silu values") {
  CHECK(Silu(0.0) == 0.0);
  CHECK(Silu(10.0) == doctest::Approx(9.999546).epsilon(1e-7));
  CHECK(Silu(-10.0) == doctest::Approx(-4.5398899e-4).epsilon(1e-6));
  CHECK(std::isfinite(Silu(-1000.0)));
  CHECK(Silu(1000.0) == 1000.0);
  Activations u(1, 3);
  u << -2.0, 0.5, 3.0;
  const Activations s = Silu(u);
  for (int k = 0; k < 3; ++k) CHECK(s(0, k) == doctest::Approx(testing::NaiveSilu(u(0, k))).epsilon(1e-15));
}

TEST_CASE("layer norm") {
  SUBCASE("constant input with unit affine gives zeros") {
    const Activations x = Activations::Constant(4, 3, 2.5);
    const Activations y = LayerNorm(x, Eigen::VectorXd::Ones(4),
                                    Eigen::VectorXd::Zero(4), 1e-5);
    CHECK(y.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("scalar affine sets per-step mean and variance") {
    std::mt19937_64 rng(1);
    const Activations x = RandomActivations(6, 5, rng);
    const Activations y = LayerNorm(x, Eigen::VectorXd::Constant(6, 2.0),
                                    Eigen::VectorXd::Constant(6, -0.5), 1e-12);
    for (Eigen::Index t = 0; t < 5; ++t) {
      const double mean = y.col(t).mean();
      const double var = (y.col(t).array() - mean).square().mean();
      CHECK(mean == doctest::Approx(-0.5).epsilon(1e-12));
      CHECK(var == doctest::Approx(4.0).epsilon(1e-9));
    }
  }
  SUBCASE("random 4x5 case against a loop") {
    std::mt19937_64 rng(2);
    const Activations x = RandomActivations(4, 5, rng);
    const std::vector<double> g = {1.5, 0.5, -1.0, 2.0}, b = {0.1, 0.0, -0.2, 0.3};
    const Activations y = LayerNorm(x, Eigen::Map<const Eigen::VectorXd>(g.data(), 4),
                                    Eigen::Map<const Eigen::VectorXd>(b.data(), 4), 1e-5);
    CHECK(MaxAbsDiff(y, testing::NaiveLayerNorm(x, g, b, 1e-5)) < 1e-12);
  }
}

TEST_CASE("identity kernel passes the input through") {
  std::mt19937_64 rng(3);
  Layer l = RandomLayer("id", LayerRole::kTrunk, LayerKind::kConv1d, 3, 3, 1, 1,
                        false, false, rng);
  std::fill(l.weight.begin(), l.weight.end(), 0.0f);
  std::fill(l.bias.begin(), l.bias.end(), 0.0f);
  for (int c = 0; c < 3; ++c) l.weight[static_cast<std::size_t>(c) * 3 + c] = 1.0f;
  l.Prepare();
  const Activations x = RandomActivations(3, 7, rng);
  CHECK(Conv1d(x, l) == x);
  Layer d = l;
  d.kind = LayerKind::kDeconv1d;
  d.Prepare();
  CHECK(Deconv1d(x, d) == x);
}

TEST_CASE("conv and deconv match naive loops across shapes") {
  std::mt19937_64 rng(4);
  int cases = 0;
  for (int kernel : {1, 3, 5}) {
    for (int stride : {1, 2, 3}) {
      for (int len : {1, 4, 7}) {
        const Layer c = RandomLayer("c", LayerRole::kTrunk, LayerKind::kConv1d,
                                    3, 2, kernel, stride, false, false, rng);
        const Activations x = RandomActivations(3, len, rng);
        const Activations y = Conv1d(x, c);
        CHECK(y.cols() == (len + stride - 1) / stride);
        CHECK(MaxAbsDiff(y, testing::NaiveConv(x, c)) < 1e-10);

        const Layer d = RandomLayer("d", LayerRole::kDecoder,
                                    LayerKind::kDeconv1d, 3, 2, kernel, stride,
                                    false, false, rng);
        const Activations yd = Deconv1d(x, d);
        CHECK(yd.cols() == len * stride);
        CHECK(MaxAbsDiff(yd, testing::NaiveDeconv(x, d)) < 1e-10);
        ++cases;
      }
    }
  }
  CHECK(cases == 27);
}

TEST_CASE("deconv is the adjoint of conv") {
  std::mt19937_64 rng(5);
  for (int kernel : {1, 3, 5}) {
    for (int stride : {1, 2, 4}) {
      Layer c = RandomLayer("c", LayerRole::kTrunk, LayerKind::kConv1d, 3, 4,
                            kernel, stride, false, false, rng);
      std::fill(c.bias.begin(), c.bias.end(), 0.0f);
      c.Prepare();
      Layer d = c;
      d.kind = LayerKind::kDeconv1d;
      d.in_ch = c.out_ch;
      d.out_ch = c.in_ch;
      d.bias.assign(static_cast<std::size_t>(d.out_ch), 0.0f);
      d.Prepare();
      const Activations x = RandomActivations(3, 6 * stride, rng);
      const Activations y = RandomActivations(4, 6, rng);
      const double lhs = (Conv1d(x, c).array() * y.array()).sum();
      const double rhs = (x.array() * Deconv1d(y, d).array()).sum();
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax") {
  Eigen::VectorXd a(3);
  a << 1000.0, 1000.0, -1000.0;
  const auto p = Softmax(a);
  CHECK(p(0) == doctest::Approx(0.5));
  CHECK(p(2) == 0.0);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("encoder forward matches the naive oracle") {
  const ModelBundle b = TinyBundle(6);
  std::mt19937_64 rng(7);
  for (int len : {1, 2, 5, 8}) {
    const Activations x = RandomActivations(5, len, rng);
    const EncoderOutput out = EncoderForward(b, x);
    const auto ref = testing::NaiveEncode(b, x);
    CHECK(MaxAbsDiff(out.mu, ref.mu) < 1e-10);
    CHECK(MaxAbsDiff(out.sigma_sq, ref.sigma_sq) < 1e-10);
    REQUIRE(out.rho.size() == 2);
    for (int k = 0; k < 2; ++k) CHECK(std::abs(out.rho(k) - ref.rho[k]) < 1e-10);
    CHECK(out.rho.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.sigma_sq.minCoeff() > 0.0);
    CHECK(out.mu.cols() == (len + 1) / 2);
  }
}

TEST_CASE("decoder forward matches the naive oracle and is positive") {
  const ModelBundle b = TinyBundle(8);
  std::mt19937_64 rng(9);
  for (int len : {1, 3, 4}) {
    const Activations z = RandomActivations(2, len, rng);
    const std::vector<double> c = {0.3, 0.7};
    Eigen::VectorXd cv(2);
    cv << 0.3, 0.7;
    const Activations s2 = DecoderForward(b, z, cv, 2 * len - 1);
    const Activations ref = testing::NaiveDecodeLog(b, z, c, 2 * len - 1);
    CHECK(MaxAbsDiff(s2.array().log().matrix(), ref) < 1e-10);
    CHECK(s2.minCoeff() >= kVarianceFloor);
    CHECK(s2.allFinite());
  }
  CHECK_THROWS_AS(DecoderForward(b, RandomActivations(2, 2, rng),
                                 Eigen::VectorXd::Constant(2, 0.5), 5),
                  Error);
}

TEST_CASE("decoder output is continuous in the class vector") {
  const ModelBundle b = TinyBundle(10);
  std::mt19937_64 rng(11);
  const Activations z = RandomActivations(2, 4, rng);
  Eigen::VectorXd onehot(2);
  onehot << 1.0, 0.0;
  const Activations base = DecoderForward(b, z, onehot, 8);
  double prev = 0.0;
  for (double eps : {1e-3, 5e-4, 2.5e-4}) {
    Eigen::VectorXd soft(2);
    soft << 1.0 - eps, eps;
    const double diff = MaxAbsDiff(DecoderForward(b, z, soft, 8), base);
    CHECK(diff < 100.0 * eps);
    if (prev > 0.0) CHECK(diff / prev == doctest::Approx(0.5).epsilon(0.01));
    prev = diff;
  }
}

TEST_CASE("class posterior ignores frame order for a pointwise encoder") {
  const ModelBundle b = TinyBundle(12, 5, /*pointwise=*/true);
  std::mt19937_64 rng(13);
  const Activations x = RandomActivations(5, 9, rng);
  std::vector<int> order(9);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Activations shuffled(5, 9);
  for (int t = 0; t < 9; ++t) shuffled.col(t) = x.col(order[t]);
  const auto c1 = InferClass(b, x);
  const auto c2 = InferClass(b, shuffled);
  CHECK((c1 - c2).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(c1.minCoeff() >= 0.0);
}

TEST_CASE("non-finite activations name the layer") {
  ModelBundle b = TinyBundle(14);
  b.layers[0].bias[0] = std::numeric_limits<float>::infinity();
  b.layers[0].Prepare();
  std::mt19937_64 rng(15);
  CHECK_THROWS_WITH_AS(EncoderForward(b, RandomActivations(5, 4, rng)),
                       "non-finite activation at layer 0 ('enc.trunk.0')",
                       Error);
}

TEST_CASE("product-of-experts latent") {
  Activations mu(1, 1), s2(1, 1);
  mu << 2.0;
  s2 << 3.0;
  CHECK(InferLatentPoe(mu, s2, 1.0)(0, 0) == 0.5);

  std::mt19937_64 rng(16);
  const Activations m = RandomActivations(4, 6, rng);
  const Activations s = RandomActivations(4, 6, rng).array().exp().matrix();
  CHECK(InferLatentPoe(m, s, 0.0) == m);
  CHECK(InferLatentPoe(m, s, 1e14).cwiseAbs().maxCoeff() < 1e-12);
  Activations prev = m;
  for (double alpha : {0.1, 1.0, 10.0}) {
    const Activations z = InferLatentPoe(m, s, alpha);
    const Eigen::ArrayXXd ratio = z.array() / m.array();
    CHECK(ratio.minCoeff() > 0.0);
    CHECK(ratio.maxCoeff() <= 1.0);
    CHECK((z.array().abs() < prev.array().abs()).all());
    prev = z;
  }
  CHECK_THROWS_AS(InferLatentPoe(m, s, -1.0), Error);
}

TEST_CASE("container round trip is bit exact") {
  const ModelBundle b = TinyBundle(17);
  const auto bytes = SerializeModel(b);
  const ModelBundle r = ParseModel(bytes);
  REQUIRE(r.layers.size() == b.layers.size());
  for (std::size_t i = 0; i < b.layers.size(); ++i) {
    CHECK(r.layers[i].name == b.layers[i].name);
    CHECK(r.layers[i].role == b.layers[i].role);
    CHECK(r.layers[i].weight == b.layers[i].weight);
    CHECK(r.layers[i].bias == b.layers[i].bias);
    CHECK(r.layers[i].ln_gamma == b.layers[i].ln_gamma);
  }
  CHECK(SerializeModel(r) == bytes);

  const auto dir = testing::TempDir("cavw");
  SaveModel(b, (dir / "m.cavw").string());
  CHECK(ReadBytes((dir / "m.cavw").string()) == bytes);
}

TEST_CASE("golden fixture loads and re-serializes to the same bytes") {
  const auto path = testing::FixturePath("toy_chimera.cavw");
  const ModelBundle b = LoadModel(path);
  CHECK(b.class_count == 2);
  CHECK(b.freq_bins == 1025);
  CHECK(SerializeModel(b) == ReadBytes(path));
}

TEST_CASE("container errors") {
  const auto good = SerializeModel(TinyBundle(18));
  SUBCASE("truncated tensor section") {
    auto bytes = good;
    bytes.resize(bytes.size() - 9);
    CHECK(ErrorOf(bytes).find("checksum") != std::string::npos);
  }
  SUBCASE("corrupted tensor data") {
    auto bytes = good;
    bytes[bytes.size() - 10] ^= 0x40;
    CHECK(ErrorOf(bytes).find("checksum") != std::string::npos);
  }
  SUBCASE("bad magic and version") {
    auto bytes = good;
    bytes[0] = 'X';
    CHECK(ErrorOf(bytes).find("magic") != std::string::npos);
    bytes = good;
    bytes[4] = 2;
    CHECK(ErrorOf(bytes).find("version") != std::string::npos);
  }
  SUBCASE("channel mismatch names the layer") {
    ModelBundle b = TinyBundle(19);
    b.layers[4].in_ch = 5;
    b.layers[4].weight.resize(5 * 3 * 3);
    CHECK_THROWS_WITH_AS(b.Validate(), doctest::Contains("dec.0"), Error);
    b = TinyBundle(19);
    b.layers[1].in_ch = 3;
    b.layers[1].weight.resize(2 * 3 * 3);
    CHECK_THROWS_WITH_AS(b.Validate(), doctest::Contains("enc.mu"), Error);
  }
  SUBCASE("tensor size mismatch names the layer") {
    ModelBundle b = TinyBundle(20);
    b.layers[2].bias.pop_back();
    CHECK_THROWS_WITH_AS(b.Validate(), doctest::Contains("enc.logvar"), Error);
  }
  SUBCASE("even kernel is rejected") {
    ModelBundle b = TinyBundle(21);
    b.layers[2].kernel = 2;
    b.layers[2].weight.resize(4 * 2 * 2);
    CHECK_THROWS_WITH_AS(b.Validate(), doctest::Contains("enc.logvar"), Error);
  }
}

TEST_CASE("engine forward agrees with the exporter reference outputs") {
  const ModelBundle b = LoadModel(testing::FixturePath("toy_chimera.cavw"));
  std::ifstream in(testing::FixturePath("toy_chimera_parity.json"));
  const auto ref = nlohmann::json::parse(in);
  const int frames = ref["frames"].get<int>();
  Activations x(b.freq_bins, frames);
  for (int f = 0; f < b.freq_bins; ++f) {
    for (int n = 0; n < frames; ++n) {
      x(f, n) = 2.0 * std::sin(0.37 * f + 1.3 * n) - 3.0 + 0.001 * f;
    }
  }
  const EncoderOutput enc = EncoderForward(b, x);
  CheckClose(enc.mu, FromJson(ref["mu"]), 1e-4);
  CheckClose(enc.sigma_sq, FromJson(ref["sigma_sq_z"]), 1e-4);
  for (int k = 0; k < b.class_count; ++k) {
    CHECK(std::abs(enc.rho(k) - ref["rho"][k].get<double>()) <= 1e-4);
  }
  const Activations s2 = DecoderForward(b, enc.mu, enc.rho, frames);
  CheckClose(s2.array().log().matrix(), FromJson(ref["log_sigma_sq"]), 1e-4);
}

TEST_CASE("fixture classifier labels held-out sources") {
  const ModelBundle b = LoadModel(testing::FixturePath("toy_chimera.cavw"));
  int correct = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    const auto src = GenSources(spec.classes, spec.duration_s, spec.sample_rate,
                                seed);
    for (std::size_t j = 0; j < src.size(); ++j) {
      Waveform w(1, src[j].size(), spec.sample_rate);
      w.channels[0] = src[j];
      const auto y = ToSource(Stft(w), 0);
      double gain = 0.0;
      for (const auto& c : y.data) gain += std::norm(c);
      gain /= static_cast<double>(y.data.size());
      const auto c = InferClass(b, NeuralFeatures(y, gain));
      Eigen::Index best = 0;
      c.maxCoeff(&best);
      correct += best == spec.classes[j].class_id;
      ++total;
    }
  }
  CHECK(static_cast<double>(correct) / total >= 0.95);
}

TEST_CASE("neural features") {
  SourceSpectrogram y{1, 2, {Complex(3.0, 4.0), Complex(0.0, 0.0)}};
  const Activations a = NeuralFeatures(y, 5.0);
  CHECK(a(0, 0) == doctest::Approx(std::log(5.0 + kVarianceFloor)));
  CHECK(a(0, 1) == doctest::Approx(std::log(kVarianceFloor)));
  CHECK(NeuralFeatures(y, 5.0, true)(0, 0) ==
        doctest::Approx(std::log(1.0 + kVarianceFloor)));
  CHECK_THROWS_AS(NeuralFeatures(y, 0.0), Error);
}

TEST_CASE("neural update returns g times sigma^2 and is deterministic") {
  auto b = std::make_shared<ModelBundle>(TinyBundle(22, 9));
  const auto x = testing::RandomSpectrogram(9, 6, 2, 23);
  const auto y = DemixSource(x, DemixingStack::Identity(9, 2), 0);
  NeuralSourceState s1, s2;
  const PoeConfig cfg{0.5, false};
  const auto v1 = NeuralUpdate(s1, *b, y, cfg);
  const auto v2 = NeuralUpdate(s2, *b, y, cfg);
  CHECK(v1 == v2);
  REQUIRE(v1.size() == 54);
  for (std::size_t k = 0; k < v1.size(); ++k) CHECK(v1[k] == s1.gain * s1.sigma_sq[k]);
  CHECK(s1.gain == doctest::Approx(UpdateGain(y, s1.sigma_sq)).epsilon(1e-15));
  CHECK(s1.c.sum() == doctest::Approx(1.0));

  // First call normalizes by the mean power; later calls by the refit gain.
  const Activations feat = NeuralFeatures(y, UpdateGain(y, std::vector<double>(54, 1.0)));
  const EncoderOutput enc = EncoderForward(*b, feat);
  CHECK(MaxAbsDiff(s1.z, InferLatentPoe(enc.mu, enc.sigma_sq, 0.5)) < 1e-15);

  NeuralSourceModel model(b, 2, cfg);
  CHECK(model.Update(0, y) == v1);
  CHECK(model.Gain(0) == s1.gain);
  CHECK(model.NumSources() == 2);

  ModelBundle wrong = TinyBundle(24, 7);
  NeuralSourceState s3;
  CHECK_THROWS_AS(NeuralUpdate(s3, wrong, y, cfg), Error);
}

}  // namespace bss::neural
