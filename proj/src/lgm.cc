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

#include "bss/lgm.h"

#include <chrono>
#include <cmath>
#include <limits>

#include "bss/log.h"
#include "bss/parallel.h"

namespace bss {
namespace {

// Reciprocal condition estimate below which the IP system counts as
// near-singular.
constexpr double kMinRcond = 1e-12;
constexpr double kCovarianceRegularization = 1e-10;

void CheckShapes(const ComplexSpectrogram& x, const DemixingStack& w) {
  if (w.NumBins() != x.NumBins()) {
    throw Error("demixing stack has " + std::to_string(w.NumBins()) +
                " bins, spectrogram has " + std::to_string(x.NumBins()));
  }
  if (w.Size() != x.NumChannels()) {
    throw Error("demixing matrices are " + std::to_string(w.Size()) + "x" +
                std::to_string(w.Size()) + " but input has " +
                std::to_string(x.NumChannels()) + " channels");
  }
}

inline Complex ConjDot(const CMatrix& w_f, std::size_t j,
                       std::span<const Complex> x) {
  Complex acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += std::conj(w_f(static_cast<Eigen::Index>(i),
                         static_cast<Eigen::Index>(j))) *
           x[i];
  }
  return acc;
}

}  // namespace

DemixingStack DemixingStack::Identity(std::size_t num_bins,
                                      std::size_t size) {
  DemixingStack stack;
  const auto n = static_cast<Eigen::Index>(size);
  stack.mats.assign(num_bins, CMatrix::Identity(n, n));
  return stack;
}

VarianceField::VarianceField(std::size_t num_sources, std::size_t num_bins,
                             std::size_t num_frames, double fill)
    : num_sources_(num_sources),
      num_bins_(num_bins),
      num_frames_(num_frames),
      v_(num_sources * num_bins * num_frames, fill) {}

void VarianceField::SetSource(std::size_t j, std::span<const double> values) {
  std::span<double> dst = Source(j);
  if (values.size() != dst.size()) {
    throw Error("variance slice has " + std::to_string(values.size()) +
                " entries, expected " + std::to_string(dst.size()));
  }
  std::copy(values.begin(), values.end(), dst.begin());
}

ComplexSpectrogram Demix(const ComplexSpectrogram& x, const DemixingStack& w) {
  CheckShapes(x, w);
  ComplexSpectrogram y = x.ZerosLike(x.NumChannels());
  const std::size_t num_ch = x.NumChannels();
  for (std::size_t f = 0; f < x.NumBins(); ++f) {
    for (std::size_t n = 0; n < x.NumFrames(); ++n) {
      const auto obs = x.Observation(f, n);
      for (std::size_t j = 0; j < num_ch; ++j) {
        y(f, n, j) = ConjDot(w.mats[f], j, obs);
      }
    }
  }
  return y;
}

SourceSpectrogram DemixSource(const ComplexSpectrogram& x,
                              const DemixingStack& w, std::size_t j) {
  CheckShapes(x, w);
  if (j >= x.NumChannels()) throw Error("source index out of range");
  SourceSpectrogram y{x.NumBins(), x.NumFrames(), {}};
  y.data.resize(x.NumBins() * x.NumFrames());
  for (std::size_t f = 0; f < x.NumBins(); ++f) {
    for (std::size_t n = 0; n < x.NumFrames(); ++n) {
      y.data[f * x.NumFrames() + n] = ConjDot(w.mats[f], j, x.Observation(f, n));
    }
  }
  return y;
}

double NegLogLikelihood(const ComplexSpectrogram& x, const DemixingStack& w,
                        const VarianceField& v) {
  CheckShapes(x, w);
  const std::size_t num_src = x.NumChannels();
  if (v.NumSources() != num_src || v.NumBins() != x.NumBins() ||
      v.NumFrames() != x.NumFrames()) {
    throw Error("variance field shape does not match the spectrogram");
  }
  const double num_frames = static_cast<double>(x.NumFrames());
  double log_det = 0.0;
  for (const CMatrix& m : w.mats) {
    const double abs_det = std::abs(m.determinant());
    if (!(abs_det > 0.0) || !std::isfinite(abs_det)) {
      return std::numeric_limits<double>::infinity();
    }
    log_det += std::log(abs_det);
  }
  double fit = 0.0;
  for (std::size_t f = 0; f < x.NumBins(); ++f) {
    for (std::size_t n = 0; n < x.NumFrames(); ++n) {
      const auto obs = x.Observation(f, n);
      for (std::size_t j = 0; j < num_src; ++j) {
        const double vj = v(j, f, n);
        fit += std::log(vj) + std::norm(ConjDot(w.mats[f], j, obs)) / vj;
      }
    }
  }
  return -(2.0 * num_frames * log_det - fit);
}

CMatrix WeightedSpatialCovariance(const ComplexSpectrogram& x, std::size_t f,
                                  std::span<const double> v_f) {
  const std::size_t num_ch = x.NumChannels();
  const std::size_t num_frames = x.NumFrames();
  if (v_f.size() != num_frames) {
    throw Error("variance row length does not match frame count");
  }
  const auto dim = static_cast<Eigen::Index>(num_ch);
  CMatrix sigma = CMatrix::Zero(dim, dim);
  for (std::size_t n = 0; n < num_frames; ++n) {
    const auto obs = x.Observation(f, n);
    const double inv_v = 1.0 / v_f[n];
    for (Eigen::Index a = 0; a < dim; ++a) {
      const Complex xa = obs[a] * inv_v;
      for (Eigen::Index b = 0; b <= a; ++b) {
        sigma(a, b) += xa * std::conj(obs[b]);
      }
    }
  }
  sigma /= static_cast<double>(num_frames);
  for (Eigen::Index a = 0; a < dim; ++a) {
    sigma(a, a) = sigma(a, a).real();
    for (Eigen::Index b = 0; b < a; ++b) sigma(b, a) = std::conj(sigma(a, b));
  }
  return sigma;
}

CVector IpUpdate(const CMatrix& w_f, const CMatrix& sigma, std::size_t j) {
  const Eigen::Index dim = w_f.rows();
  if (w_f.cols() != dim || sigma.rows() != dim || sigma.cols() != dim) {
    throw Error("IpUpdate: inconsistent matrix shapes");
  }
  if (static_cast<Eigen::Index>(j) >= dim) {
    throw Error("IpUpdate: source index out of range");
  }
  const CVector e_j = CVector::Unit(dim, static_cast<Eigen::Index>(j));

  auto solve = [&](const CMatrix& cov, CVector& out) {
    Eigen::PartialPivLU<CMatrix> lu(w_f.adjoint() * cov);
    const double rcond = lu.rcond();
    if (!(rcond >= kMinRcond)) return false;
    out = lu.solve(e_j);
    const double quad = (out.adjoint() * cov * out)(0, 0).real();
    if (!(quad > 0.0) || !std::isfinite(quad)) return false;
    out /= std::sqrt(quad);
    return out.allFinite();
  };

  CVector w_j;
  if (solve(sigma, w_j)) return w_j;

  const double trace = sigma.trace().real();
  const double ridge =
      kCovarianceRegularization * (trace > 0.0 ? trace : 1.0);
  CMatrix regularized = sigma;
  regularized.diagonal().array() += ridge;
  BSS_LOG(2) << "IP system near-singular for source " << j
             << ", retrying with ridge " << ridge;
  if (solve(regularized, w_j)) return w_j;
  throw Error("IP update for source " + std::to_string(j) +
              " is singular even after regularization");
}

double UpdateGain(const SourceSpectrogram& y,
                  std::span<const double> sigma_sq) {
  if (sigma_sq.size() != y.data.size()) {
    throw Error("gain update: variance and spectrogram sizes differ");
  }
  if (y.data.empty()) throw Error("gain update on an empty spectrogram");
  double acc = 0.0;
  for (std::size_t k = 0; k < y.data.size(); ++k) {
    acc += std::norm(y.data[k]) / sigma_sq[k];
  }
  return acc / static_cast<double>(y.data.size());
}

ComplexSpectrogram BackProject(const ComplexSpectrogram& y,
                               const DemixingStack& w, std::size_t ref_ch) {
  CheckShapes(y, w);
  const std::size_t num_src = y.NumChannels();
  if (ref_ch >= num_src) throw Error("reference channel out of range");
  ComplexSpectrogram out = y.ZerosLike(num_src);
  for (std::size_t f = 0; f < y.NumBins(); ++f) {
    Eigen::PartialPivLU<CMatrix> lu(w.mats[f].adjoint());
    if (!(std::abs(lu.determinant()) > 0.0)) {
      throw Error("back-projection: W(" + std::to_string(f) +
                  ") is singular");
    }
    // Mixing estimate A(f) = W^{-H}(f).
    const CMatrix mixing = lu.inverse();
    for (std::size_t j = 0; j < num_src; ++j) {
      const Complex scale = mixing(static_cast<Eigen::Index>(ref_ch),
                                   static_cast<Eigen::Index>(j));
      for (std::size_t n = 0; n < y.NumFrames(); ++n) {
        out(f, n, j) = scale * y(f, n, j);
      }
    }
  }
  return out;
}

SeparationResult Separate(const ComplexSpectrogram& x, SourceModel& model,
                          const SeparateOptions& opts) {
  const std::size_t num_ch = x.NumChannels();
  const std::size_t num_bins = x.NumBins();
  const std::size_t num_frames = x.NumFrames();
  if (num_ch < 2) throw Error("separation needs at least two channels");
  if (model.NumSources() != num_ch) {
    throw Error("source model has " + std::to_string(model.NumSources()) +
                " sources but the mixture has " + std::to_string(num_ch) +
                " channels");
  }
  if (opts.iters < 0) throw Error("iteration count must be nonnegative");
  if (opts.ref_ch >= num_ch) throw Error("reference channel out of range");

  SeparationResult result;
  result.demix = DemixingStack::Identity(num_bins, num_ch);
  VarianceField v(num_ch, num_bins, num_frames, 1.0);

  using Clock = std::chrono::steady_clock;
  for (int it = 0; it < opts.iters; ++it) {
    const auto start = Clock::now();
    for (std::size_t j = 0; j < num_ch; ++j) {
      const SourceSpectrogram y = DemixSource(x, result.demix, j);
      std::vector<double> vj = model.Update(j, y);
      if (vj.size() != num_bins * num_frames) {
        throw Error("source model returned a variance field of wrong size");
      }
      for (double& value : vj) {
        if (!std::isfinite(value)) {
          throw Error("non-finite variance at iteration " +
                      std::to_string(it) + ", source " + std::to_string(j));
        }
        value = std::max(value, kVarianceFloor);
      }
      v.SetSource(j, vj);

      ParallelFor(num_bins, opts.threads, [&](std::size_t f) {
        const CMatrix sigma = WeightedSpatialCovariance(
            x, f, v.Source(j).subspan(f * num_frames, num_frames));
        result.demix.mats[f].col(static_cast<Eigen::Index>(j)) =
            IpUpdate(result.demix.mats[f], sigma, j);
      });
      for (std::size_t f = 0; f < num_bins; ++f) {
        if (!result.demix.mats[f].allFinite()) {
          throw Error("non-finite demixing matrix at iteration " +
                      std::to_string(it) + ", source " + std::to_string(j) +
                      ", bin " + std::to_string(f));
        }
      }
    }
    result.neg_loglik.push_back(NegLogLikelihood(x, result.demix, v));
    result.iter_seconds.push_back(
        std::chrono::duration<double>(Clock::now() - start).count());
    BSS_LOG(2) << "iteration " << it << " nll " << result.neg_loglik.back();
  }

  // With no iterations the identity-demixed input is returned as is.
  result.sources = opts.iters == 0
                       ? Demix(x, result.demix)
                       : BackProject(Demix(x, result.demix), result.demix,
                                     opts.ref_ch);
  return result;
}

}  // namespace bss
