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

#include "bss/neural/kernels.h"

#include <cmath>

namespace bss::neural {

double Silu(double u) {
  // Written so that neither branch overflows exp().
  return u >= 0.0 ? u / (1.0 + std::exp(-u))
                  : u * std::exp(u) / (1.0 + std::exp(u));
}

Activations Silu(const Activations& u) {
  return u.unaryExpr([](double v) { return Silu(v); });
}

Activations LayerNorm(const Activations& x, const Eigen::VectorXd& gamma,
                      const Eigen::VectorXd& beta, double eps) {
  if (gamma.size() != x.rows() || beta.size() != x.rows()) {
    throw Error("layer norm affine size does not match channel count");
  }
  Activations out(x.rows(), x.cols());
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    const double mean = x.col(t).mean();
    const double var = (x.col(t).array() - mean).square().mean();
    const double inv_std = 1.0 / std::sqrt(var + eps);
    out.col(t) =
        ((x.col(t).array() - mean) * inv_std) * gamma.array() + beta.array();
  }
  return out;
}

Activations Conv1d(const Activations& x, const Layer& layer) {
  if (x.rows() != layer.in_ch) {
    throw Error("layer '" + layer.name + "': input has " +
                std::to_string(x.rows()) + " channels, expected " +
                std::to_string(layer.in_ch));
  }
  const Eigen::Index len = x.cols();
  const Eigen::Index stride = layer.stride;
  const Eigen::Index pad = (layer.kernel - 1) / 2;
  const Eigen::Index out_len = (len + stride - 1) / stride;
  Activations out = layer.bias_d.replicate(1, out_len);
  Eigen::MatrixXd gathered(x.rows(), out_len);
  for (Eigen::Index k = 0; k < layer.kernel; ++k) {
    gathered.setZero();
    bool any = false;
    for (Eigen::Index t = 0; t < out_len; ++t) {
      const Eigen::Index src = t * stride + k - pad;
      if (src >= 0 && src < len) {
        gathered.col(t) = x.col(src);
        any = true;
      }
    }
    if (any) out.noalias() += layer.taps[k] * gathered;
  }
  return out;
}

Activations Deconv1d(const Activations& x, const Layer& layer) {
  if (x.rows() != layer.in_ch) {
    throw Error("layer '" + layer.name + "': input has " +
                std::to_string(x.rows()) + " channels, expected " +
                std::to_string(layer.in_ch));
  }
  const Eigen::Index len = x.cols();
  const Eigen::Index stride = layer.stride;
  const Eigen::Index pad = (layer.kernel - 1) / 2;
  const Eigen::Index out_len = len * stride;
  Activations out = layer.bias_d.replicate(1, out_len);
  for (Eigen::Index k = 0; k < layer.kernel; ++k) {
    const Eigen::MatrixXd contrib = layer.taps[k] * x;
    for (Eigen::Index t = 0; t < len; ++t) {
      const Eigen::Index dst = t * stride + k - pad;
      if (dst >= 0 && dst < out_len) out.col(dst) += contrib.col(t);
    }
  }
  return out;
}

Activations ApplyLayer(const Activations& x, const Layer& layer, double eps) {
  Activations h =
      layer.kind == LayerKind::kConv1d ? Conv1d(x, layer) : Deconv1d(x, layer);
  if (layer.layer_norm) h = LayerNorm(h, layer.gamma_d, layer.beta_d, eps);
  if (layer.activation == Activation::kSilu) h = Silu(h);
  return h;
}

Eigen::VectorXd Softmax(const Eigen::VectorXd& logits) {
  const double peak = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - peak).exp();
  return e / e.sum();
}

}  // namespace bss::neural
