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

#ifndef BSS_LGM_H_
#define BSS_LGM_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bss/common.h"
#include "bss/signal.h"

namespace bss {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Per-frequency demixing matrices W(f). Column j of W(f) is w_j(f), so the
// separated signal is y_j(f, n) = w_j(f)^H x(f, n).
struct DemixingStack {
  std::vector<CMatrix> mats;

  static DemixingStack Identity(std::size_t num_bins, std::size_t size);
  std::size_t NumBins() const { return mats.size(); }
  std::size_t Size() const { return mats.empty() ? 0 : mats.front().rows(); }
};

// Source variances v_j(f, n) laid out as [J x F x N].
class VarianceField {
 public:
  VarianceField() = default;
  VarianceField(std::size_t num_sources, std::size_t num_bins,
                std::size_t num_frames, double fill = 1.0);

  std::size_t NumSources() const { return num_sources_; }
  std::size_t NumBins() const { return num_bins_; }
  std::size_t NumFrames() const { return num_frames_; }

  double& operator()(std::size_t j, std::size_t f, std::size_t n) {
    return v_[(j * num_bins_ + f) * num_frames_ + n];
  }
  double operator()(std::size_t j, std::size_t f, std::size_t n) const {
    return v_[(j * num_bins_ + f) * num_frames_ + n];
  }

  // The [F x N] block of source j, row-major.
  std::span<double> Source(std::size_t j) {
    return {v_.data() + j * num_bins_ * num_frames_, num_bins_ * num_frames_};
  }
  std::span<const double> Source(std::size_t j) const {
    return {v_.data() + j * num_bins_ * num_frames_, num_bins_ * num_frames_};
  }

  void SetSource(std::size_t j, std::span<const double> values);

 private:
  std::size_t num_sources_ = 0;
  std::size_t num_bins_ = 0;
  std::size_t num_frames_ = 0;
  std::vector<double> v_;
};

// A single-source spectrogram slice y_j, row-major [F x N].
struct SourceSpectrogram {
  std::size_t num_bins = 0;
  std::size_t num_frames = 0;
  std::vector<Complex> data;

  Complex operator()(std::size_t f, std::size_t n) const {
    return data[f * num_frames + n];
  }
};

// Contract between the separation loop and a per-source variance model.
class SourceModel {
 public:
  virtual ~SourceModel() = default;

  // Refits the parameters of source j to its current separated signal and
  // returns the new variance field [F x N], strictly positive and finite.
  virtual std::vector<double> Update(std::size_t j,
                                     const SourceSpectrogram& y) = 0;

  // Current gain g_j (1 for models without an explicit gain).
  virtual double Gain(std::size_t /*j*/) const { return 1.0; }

  virtual std::size_t NumSources() const = 0;
};

// y_j(f, n) = w_j(f)^H x(f, n) for every source.
ComplexSpectrogram Demix(const ComplexSpectrogram& x, const DemixingStack& w);

// Row j only.
SourceSpectrogram DemixSource(const ComplexSpectrogram& x,
                              const DemixingStack& w, std::size_t j);

// Negative log-likelihood of the local Gaussian model with constants dropped:
//   -(2N sum_f log|det W^H(f)| - sum_{f,n,j} (log v + |w_j^H x|^2 / v)).
// A singular W(f) yields +infinity.
double NegLogLikelihood(const ComplexSpectrogram& x, const DemixingStack& w,
                        const VarianceField& v);

// Sigma_j(f) = (1/N) sum_n x(f,n) x(f,n)^H / v_j(f,n) for one frequency.
CMatrix WeightedSpatialCovariance(const ComplexSpectrogram& x, std::size_t f,
                                  std::span<const double> v_f);

// Iterative-projection update of column j of W(f). Returns the new column
// normalized so that w^H Sigma w = 1. Near-singular systems are retried once
// with Sigma + 1e-10 trace(Sigma) I.
CVector IpUpdate(const CMatrix& w_f, const CMatrix& sigma, std::size_t j);

// g = (1/FN) sum |y|^2 / sigma_sq.
double UpdateGain(const SourceSpectrogram& y,
                  std::span<const double> sigma_sq);

// Rescales each source by the (ref_ch, j) entry of W^{-H}(f).
ComplexSpectrogram BackProject(const ComplexSpectrogram& y,
                               const DemixingStack& w, std::size_t ref_ch);

struct SeparateOptions {
  int iters = 60;
  std::uint64_t seed = 0;
  std::size_t ref_ch = 0;
  int threads = 1;
};

struct SeparationResult {
  DemixingStack demix;
  // Back-projected source images [F x N x J]; the demixed input itself
  // when iters is 0.
  ComplexSpectrogram sources;
  std::vector<double> neg_loglik;
  std::vector<double> iter_seconds;
};

// Alternates source-model updates and per-frequency IP updates, source by
// source, starting from W(f) = I.
SeparationResult Separate(const ComplexSpectrogram& x, SourceModel& model,
                          const SeparateOptions& opts);

}  // namespace bss

#endif  // BSS_LGM_H_
