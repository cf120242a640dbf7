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

#ifndef BSS_NEURAL_KERNELS_H_
#define BSS_NEURAL_KERNELS_H_

#include <Eigen/Dense>

#include "bss/neural/bundle.h"

namespace bss::neural {

// Activations are [channels x time] matrices; a spectrogram is a sequence
// of spectra with frequency as the channel axis.
using Activations = Eigen::MatrixXd;

// u * sigmoid(u), elementwise.
Activations Silu(const Activations& u);
double Silu(double u);

// Normalizes each time step over the channel axis, then applies the
// per-channel affine (gamma, beta).
Activations LayerNorm(const Activations& x, const Eigen::VectorXd& gamma,
                      const Eigen::VectorXd& beta, double eps);

// Cross-correlation with (kernel - 1) / 2 zero padding on each side.
// Output length is ceil(T / stride).
Activations Conv1d(const Activations& x, const Layer& layer);

// Transposed convolution, the adjoint of Conv1d with the same taps.
// Output length is T * stride.
Activations Deconv1d(const Activations& x, const Layer& layer);

// Conv or deconv followed by the layer's optional norm and activation.
Activations ApplyLayer(const Activations& x, const Layer& layer, double eps);

Eigen::VectorXd Softmax(const Eigen::VectorXd& logits);

}  // namespace bss::neural

#endif  // BSS_NEURAL_KERNELS_H_
