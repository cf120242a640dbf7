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

#ifndef BSS_FFT_H_
#define BSS_FFT_H_

#include <span>

#include "bss/common.h"

namespace bss {

// Real-to-complex FFT of a fixed length backed by FFTW. The forward
// transform is unnormalized; the inverse divides by the length.
// Execution is thread-safe, construction serializes on an internal lock.
class RealFft {
 public:
  explicit RealFft(std::size_t length);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t Length() const { return length_; }
  std::size_t NumBins() const { return length_ / 2 + 1; }

  void Forward(std::span<const double> in, std::span<Complex> out) const;
  void Inverse(std::span<const Complex> in, std::span<double> out) const;

 private:
  std::size_t length_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace bss

#endif  // BSS_FFT_H_
