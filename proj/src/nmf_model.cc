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

#include "bss/nmf_model.h"

#include <cmath>
#include <random>

namespace bss {

NmfState NmfInit(std::size_t num_bins, std::size_t num_frames,
                 std::size_t num_bases, std::uint64_t seed,
                 bool flat_basis) {
  if (num_bases < 1) throw Error("NMF needs at least one basis");
  const auto F = static_cast<Eigen::Index>(num_bins);
  const auto N = static_cast<Eigen::Index>(num_frames);
  const auto K = static_cast<Eigen::Index>(flat_basis ? 1 : num_bases);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.1, 1.0);

  NmfState state;
  state.flat_basis = flat_basis;
  state.bases.resize(F, K);
  state.activations.resize(K, N);
  if (flat_basis) {
    state.bases.setOnes();
  } else {
    for (Eigen::Index f = 0; f < F; ++f) {
      for (Eigen::Index k = 0; k < K; ++k) state.bases(f, k) = uniform(rng);
    }
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index n = 0; n < N; ++n) state.activations(k, n) = uniform(rng);
  }
  return state;
}

Eigen::MatrixXd NmfVariance(const NmfState& state) {
  return (state.bases * state.activations).cwiseMax(kVarianceFloor);
}

void NmfUpdate(NmfState& state, const Eigen::MatrixXd& power) {
  if (power.rows() != state.bases.rows() ||
      power.cols() != state.activations.cols()) {
    throw Error("NMF update: power spectrogram shape mismatch");
  }
  if (!state.flat_basis) {
    const Eigen::ArrayXXd v = NmfVariance(state).array();
    const Eigen::MatrixXd num =
        (power.array() / v.square()).matrix() * state.activations.transpose();
    const Eigen::MatrixXd den =
        v.inverse().matrix() * state.activations.transpose();
    state.bases.array() *= (num.array() / den.array()).sqrt();
    state.bases = state.bases.cwiseMax(kVarianceFloor);
  }
  const Eigen::ArrayXXd v = NmfVariance(state).array();
  const Eigen::MatrixXd num =
      state.bases.transpose() * (power.array() / v.square()).matrix();
  const Eigen::MatrixXd den = state.bases.transpose() * v.inverse().matrix();
  state.activations.array() *= (num.array() / den.array()).sqrt();
  state.activations = state.activations.cwiseMax(kVarianceFloor);
}

Eigen::MatrixXd PowerOf(const SourceSpectrogram& y) {
  Eigen::MatrixXd p(static_cast<Eigen::Index>(y.num_bins),
                    static_cast<Eigen::Index>(y.num_frames));
  for (std::size_t f = 0; f < y.num_bins; ++f) {
    for (std::size_t n = 0; n < y.num_frames; ++n) {
      p(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(n)) =
          std::norm(y(f, n));
    }
  }
  return p;
}

void NmfUpdate(NmfState& state, const SourceSpectrogram& y) {
  NmfUpdate(state, PowerOf(y));
}

double ItakuraSaito(const Eigen::MatrixXd& power,
                    const Eigen::MatrixXd& variance) {
  const Eigen::ArrayXXd ratio = power.array() / variance.array();
  return (ratio - ratio.log() - 1.0).sum();
}

NmfSourceModel::NmfSourceModel(std::size_t num_sources, std::size_t num_bins,
                               std::size_t num_frames, std::size_t num_bases,
                               std::uint64_t seed, bool flat_basis) {
  states_.reserve(num_sources);
  for (std::size_t j = 0; j < num_sources; ++j) {
    states_.push_back(
        NmfInit(num_bins, num_frames, num_bases, seed + j, flat_basis));
  }
}

std::vector<double> NmfSourceModel::Update(std::size_t j,
                                           const SourceSpectrogram& y) {
  NmfState& state = states_.at(j);
  NmfUpdate(state, y);
  const Eigen::MatrixXd v = NmfVariance(state);
  // Row-major [F x N] to match VarianceField.
  std::vector<double> out(y.num_bins * y.num_frames);
  for (std::size_t f = 0; f < y.num_bins; ++f) {
    for (std::size_t n = 0; n < y.num_frames; ++n) {
      out[f * y.num_frames + n] =
          v(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(n));
    }
  }
  return out;
}

}  // namespace bss
