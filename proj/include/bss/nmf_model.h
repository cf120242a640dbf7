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

#ifndef BSS_NMF_MODEL_H_
#define BSS_NMF_MODEL_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bss/lgm.h"

namespace bss {

// Low-rank variance model v = T V with nonnegative bases T [F x K] and
// activations V [K x N]. In flat-basis (IVA) mode K = 1 and T stays at one.
struct NmfState {
  Eigen::MatrixXd bases;        // T, F x K
  Eigen::MatrixXd activations;  // V, K x N
  bool flat_basis = false;
};

// Entries drawn uniformly from [0.1, 1.0); flat_basis forces K = 1, T = 1.
NmfState NmfInit(std::size_t num_bins, std::size_t num_frames,
                 std::size_t num_bases, std::uint64_t seed,
                 bool flat_basis = false);

// v = T V floored at kVarianceFloor, as an F x N matrix.
Eigen::MatrixXd NmfVariance(const NmfState& state);

// One Itakura-Saito multiplicative sweep (T, then V) towards the power
// p(f, n) = |y(f, n)|^2. T is left untouched in flat-basis mode.
void NmfUpdate(NmfState& state, const Eigen::MatrixXd& power);
void NmfUpdate(NmfState& state, const SourceSpectrogram& y);

// Itakura-Saito divergence sum(p / v - log(p / v) - 1).
double ItakuraSaito(const Eigen::MatrixXd& power,
                    const Eigen::MatrixXd& variance);

Eigen::MatrixXd PowerOf(const SourceSpectrogram& y);

// ILRMA (or IVA with flat_basis) source model: one NMF state per source,
// one multiplicative sweep per call.
class NmfSourceModel : public SourceModel {
 public:
  NmfSourceModel(std::size_t num_sources, std::size_t num_bins,
                 std::size_t num_frames, std::size_t num_bases,
                 std::uint64_t seed, bool flat_basis = false);

  std::vector<double> Update(std::size_t j,
                             const SourceSpectrogram& y) override;
  std::size_t NumSources() const override { return states_.size(); }

  const NmfState& State(std::size_t j) const { return states_.at(j); }

 private:
  std::vector<NmfState> states_;
};

}  // namespace bss

#endif  // BSS_NMF_MODEL_H_
