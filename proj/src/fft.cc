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

#include "bss/fft.h"

#include <fftw3.h>

#include <mutex>
#include <vector>

namespace bss {
namespace {

std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

RealFft::RealFft(std::size_t length) : length_(length) {
  if (length == 0) throw Error("fft length must be positive");
  std::vector<double> real(length);
  std::vector<Complex> spec(NumBins());
  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
  const int n = static_cast<int>(length);
  std::lock_guard<std::mutex> lock(PlannerMutex());
  forward_plan_ = fftw_plan_dft_r2c_1d(n, real.data(), cplx,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
  inverse_plan_ = fftw_plan_dft_c2r_1d(
      n, cplx, real.data(),
      FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
  if (forward_plan_ == nullptr || inverse_plan_ == nullptr) {
    throw Error("fftw planning failed for length " + std::to_string(length));
  }
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(PlannerMutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void RealFft::Forward(std::span<const double> in,
                      std::span<Complex> out) const {
  if (in.size() != length_ || out.size() != NumBins()) {
    throw Error("RealFft::Forward size mismatch");
  }
  // r2c plans leave the input untouched, so the const_cast is safe.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_),
                       const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::Inverse(std::span<const Complex> in,
                      std::span<double> out) const {
  if (in.size() != NumBins() || out.size() != length_) {
    throw Error("RealFft::Inverse size mismatch");
  }
  std::vector<Complex> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(length_);
  for (double& v : out) v *= scale;
}

}  // namespace bss
