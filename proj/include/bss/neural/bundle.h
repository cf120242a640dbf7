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

#ifndef BSS_NEURAL_BUNDLE_H_
#define BSS_NEURAL_BUNDLE_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bss/common.h"

namespace bss::neural {

enum class LayerKind { kConv1d, kDeconv1d };
enum class Activation { kNone, kSilu };
// Position of a layer in the ChimeraACVAE graph.
enum class LayerRole { kTrunk, kMu, kLogVar, kClass, kDecoder };

struct Layer {
  std::string name;
  LayerRole role = LayerRole::kTrunk;
  LayerKind kind = LayerKind::kConv1d;
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 1;
  int stride = 1;
  Activation activation = Activation::kNone;
  bool layer_norm = false;

  // Raw float32 parameters as stored in the container.
  // conv1d weight: [out_ch, in_ch, kernel]; deconv1d: [in_ch, out_ch, kernel].
  std::vector<float> weight;
  std::vector<float> bias;      // [out_ch]
  std::vector<float> ln_gamma;  // [out_ch] when layer_norm
  std::vector<float> ln_beta;

  // Per-tap matrices in double precision, filled by Prepare().
  // conv1d: taps[k] is out_ch x in_ch; deconv1d: taps[k] is out_ch x in_ch
  // as well (the transpose of the stored [in, out] slice).
  std::vector<Eigen::MatrixXd> taps;
  Eigen::VectorXd bias_d;
  Eigen::VectorXd gamma_d;
  Eigen::VectorXd beta_d;

  float WeightAt(int a, int b, int k) const {
    const int second = kind == LayerKind::kConv1d ? in_ch : out_ch;
    return weight[(static_cast<std::size_t>(a) * second + b) * kernel + k];
  }

  // Builds the double-precision views from the raw tensors.
  void Prepare();
};

// Loaded ChimeraACVAE weights. Immutable after load; safe to share.
struct ModelBundle {
  std::vector<Layer> layers;
  int latent_dim = 0;
  int class_count = 0;
  int freq_bins = 0;
  double layer_norm_eps = 1e-5;
  std::string feature = "log-power, g-normalized";

  std::vector<const Layer*> LayersWithRole(LayerRole role) const;
  const Layer& Head(LayerRole role) const;

  // Product of trunk and mu-head strides, i.e. the latent frame decimation.
  int EncoderStride() const;

  // Checks every structural invariant and tensor size; throws an Error
  // naming the offending layer. Also calls Prepare() on each layer.
  void Validate();
};

inline constexpr char kContainerMagic[4] = {'C', 'A', 'V', 'W'};
inline constexpr std::uint32_t kContainerVersion = 1;

// Weight container: "CAVW", u32 version, u64 manifest length, JSON
// manifest, float32 little-endian tensors in manifest order, CRC32 of the
// tensor section.
ModelBundle ParseModel(const std::vector<char>& bytes);
std::vector<char> SerializeModel(const ModelBundle& bundle);
ModelBundle LoadModel(const std::string& path);
void SaveModel(const ModelBundle& bundle, const std::string& path);

std::string ToString(LayerRole role);
std::string ToString(LayerKind kind);

}  // namespace bss::neural

#endif  // BSS_NEURAL_BUNDLE_H_
