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

#include "bss/neural/chimera.h"

#include <cmath>

namespace bss::neural {
namespace {

void CheckFinite(const Activations& a, const ModelBundle& bundle,
                 const Layer& layer) {
  if (!a.allFinite()) {
    throw Error("non-finite activation at layer " +
                std::to_string(&layer - bundle.layers.data()) + " ('" +
                layer.name + "')");
  }
}

}  // namespace

EncoderOutput EncoderForward(const ModelBundle& bundle,
                             const Activations& features) {
  if (features.rows() != bundle.freq_bins) {
    throw Error("encoder input has " + std::to_string(features.rows()) +
                " bins, model expects " + std::to_string(bundle.freq_bins));
  }
  if (features.cols() == 0) throw Error("encoder input has no frames");
  const double eps = bundle.layer_norm_eps;
  Activations h = features;
  for (const Layer* l : bundle.LayersWithRole(LayerRole::kTrunk)) {
    h = ApplyLayer(h, *l, eps);
    CheckFinite(h, bundle, *l);
  }

  EncoderOutput out;
  const Layer& mu = bundle.Head(LayerRole::kMu);
  out.mu = ApplyLayer(h, mu, eps);
  CheckFinite(out.mu, bundle, mu);

  const Layer& logvar = bundle.Head(LayerRole::kLogVar);
  out.sigma_sq = ApplyLayer(h, logvar, eps).array().exp().matrix();
  CheckFinite(out.sigma_sq, bundle, logvar);

  const Layer& cls = bundle.Head(LayerRole::kClass);
  const Activations logits = ApplyLayer(h, cls, eps);
  CheckFinite(logits, bundle, cls);
  out.rho = Softmax(logits.rowwise().mean());
  return out;
}

Activations DecoderForward(const ModelBundle& bundle, const Activations& z,
                           const Eigen::VectorXd& c,
                           Eigen::Index num_frames) {
  if (z.rows() != bundle.latent_dim) {
    throw Error("latent has " + std::to_string(z.rows()) +
                " dims, model expects " + std::to_string(bundle.latent_dim));
  }
  if (c.size() != bundle.class_count) {
    throw Error("class vector has " + std::to_string(c.size()) +
                " entries, model expects " + std::to_string(bundle.class_count));
  }
  const double eps = bundle.layer_norm_eps;
  Activations h = z;
  const auto decoder = bundle.LayersWithRole(LayerRole::kDecoder);
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    const Layer& l = *decoder[i];
    Activations in(h.rows() + c.size(), h.cols());
    in.topRows(h.rows()) = h;
    in.bottomRows(c.size()) = c.replicate(1, h.cols());
    h = ApplyLayer(in, l, eps);
    CheckFinite(h, bundle, l);
  }
  if (num_frames > h.cols()) {
    throw Error("decoder produced " + std::to_string(h.cols()) +
                " frames, fewer than the " + std::to_string(num_frames) +
                " requested");
  }
  Activations sigma_sq =
      h.leftCols(num_frames).array().exp().cwiseMax(kVarianceFloor).matrix();
  CheckFinite(sigma_sq, bundle, *decoder.back());
  return sigma_sq;
}

Eigen::VectorXd InferClass(const ModelBundle& bundle,
                           const Activations& features) {
  return EncoderForward(bundle, features).rho;
}

Activations InferLatentPoe(const Activations& mu, const Activations& sigma_sq,
                           double alpha) {
  if (alpha < 0.0) throw Error("PoE weight alpha must be nonnegative");
  if (mu.rows() != sigma_sq.rows() || mu.cols() != sigma_sq.cols()) {
    throw Error("mu and sigma^2 shapes differ");
  }
  if (alpha == 0.0) return mu;
  return (mu.array() / (1.0 + alpha * sigma_sq.array())).matrix();
}

Activations NeuralFeatures(const SourceSpectrogram& y, double gain,
                           bool amplitude_norm) {
  if (!(gain > 0.0)) throw Error("gain must be positive");
  const double scale = amplitude_norm ? 1.0 / (gain * gain) : 1.0 / gain;
  Activations feat(static_cast<Eigen::Index>(y.num_bins),
                   static_cast<Eigen::Index>(y.num_frames));
  for (std::size_t f = 0; f < y.num_bins; ++f) {
    for (std::size_t n = 0; n < y.num_frames; ++n) {
      feat(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(n)) =
          std::log(std::norm(y(f, n)) * scale + kVarianceFloor);
    }
  }
  return feat;
}

std::vector<double> NeuralUpdate(NeuralSourceState& state,
                                 const ModelBundle& bundle,
                                 const SourceSpectrogram& y,
                                 const PoeConfig& cfg) {
  if (static_cast<int>(y.num_bins) != bundle.freq_bins) {
    throw Error("spectrogram has " + std::to_string(y.num_bins) +
                " bins but the model was trained on " +
                std::to_string(bundle.freq_bins));
  }
  const std::size_t size = y.num_bins * y.num_frames;
  if (state.sigma_sq.size() != size) state.sigma_sq.assign(size, 1.0);

  state.gain = UpdateGain(y, state.sigma_sq);
  if (!(state.gain > 0.0)) state.gain = kVarianceFloor;
  const Activations feat = NeuralFeatures(y, state.gain, cfg.amplitude_norm);
  EncoderOutput enc = EncoderForward(bundle, feat);
  state.c = std::move(enc.rho);
  state.z = InferLatentPoe(enc.mu, enc.sigma_sq, cfg.alpha);
  const Activations sigma_sq = DecoderForward(
      bundle, state.z, state.c, static_cast<Eigen::Index>(y.num_frames));
  for (std::size_t f = 0; f < y.num_bins; ++f) {
    for (std::size_t n = 0; n < y.num_frames; ++n) {
      state.sigma_sq[f * y.num_frames + n] =
          sigma_sq(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(n));
    }
  }
  state.gain = UpdateGain(y, state.sigma_sq);
  if (!(state.gain > 0.0)) state.gain = kVarianceFloor;

  std::vector<double> v(size);
  for (std::size_t k = 0; k < size; ++k) v[k] = state.gain * state.sigma_sq[k];
  return v;
}

NeuralSourceModel::NeuralSourceModel(std::shared_ptr<const ModelBundle> bundle,
                                     std::size_t num_sources, PoeConfig cfg)
    : bundle_(std::move(bundle)), cfg_(cfg), states_(num_sources) {
  if (!bundle_) throw Error("neural source model needs a model bundle");
}

std::vector<double> NeuralSourceModel::Update(std::size_t j,
                                              const SourceSpectrogram& y) {
  return NeuralUpdate(states_.at(j), *bundle_, y, cfg_);
}

}  // namespace bss::neural
