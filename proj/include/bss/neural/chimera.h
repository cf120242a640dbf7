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

#ifndef BSS_NEURAL_CHIMERA_H_
#define BSS_NEURAL_CHIMERA_H_

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "bss/lgm.h"
#include "bss/neural/bundle.h"
#include "bss/neural/kernels.h"

namespace bss::neural {

struct EncoderOutput {
  Activations mu;        // D x N'
  Activations sigma_sq;  // D x N', exp of the log-variance head
  Eigen::VectorXd rho;   // C, softmax of time-averaged class logits
};

// Shared trunk followed by the mu, log-variance and class heads.
EncoderOutput EncoderForward(const ModelBundle& bundle,
                             const Activations& features);

// Decoder variance sigma^2 [F x num_frames]. The class vector is repeated
// along time and concatenated to the input of every deconv layer. The
// upsampled output is cropped to num_frames (num_frames <= N' * stride).
Activations DecoderForward(const ModelBundle& bundle, const Activations& z,
                           const Eigen::VectorXd& c, Eigen::Index num_frames);

Eigen::VectorXd InferClass(const ModelBundle& bundle,
                           const Activations& features);

// Diagonal product-of-experts shrinkage z = mu / (1 + alpha sigma^2).
Activations InferLatentPoe(const Activations& mu, const Activations& sigma_sq,
                           double alpha);

// Network input: log(|y|^2 / g + eps), or log(|y|^2 / g^2 + eps) when the
// spectrogram is divided by g as an amplitude.
Activations NeuralFeatures(const SourceSpectrogram& y, double gain,
                           bool amplitude_norm = false);

struct PoeConfig {
  double alpha = 0.0;
  bool amplitude_norm = false;
};

struct NeuralSourceState {
  Activations z;
  Eigen::VectorXd c;
  double gain = 1.0;
  std::vector<double> sigma_sq;  // row-major F x N; empty before first update
};

// One source-model refresh: gain from the previous decoder output, then
// class, latent, decoder variance and refitted gain. Returns v = g sigma^2.
std::vector<double> NeuralUpdate(NeuralSourceState& state,
                                 const ModelBundle& bundle,
                                 const SourceSpectrogram& y,
                                 const PoeConfig& cfg);

class NeuralSourceModel : public SourceModel {
 public:
  NeuralSourceModel(std::shared_ptr<const ModelBundle> bundle,
                    std::size_t num_sources, PoeConfig cfg);

  std::vector<double> Update(std::size_t j,
                             const SourceSpectrogram& y) override;
  double Gain(std::size_t j) const override { return states_.at(j).gain; }
  std::size_t NumSources() const override { return states_.size(); }

  const NeuralSourceState& State(std::size_t j) const { return states_.at(j); }

 private:
  std::shared_ptr<const ModelBundle> bundle_;
  PoeConfig cfg_;
  std::vector<NeuralSourceState> states_;
};

}  // namespace bss::neural

#endif  // BSS_NEURAL_CHIMERA_H_
