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

#include "bss/oracle_model.h"

#include <algorithm>

namespace bss {

std::vector<double> PowerSpectrogram(const ComplexSpectrogram& spec,
                                     std::size_t channel) {
  std::vector<double> p(spec.NumBins() * spec.NumFrames());
  for (std::size_t f = 0; f < spec.NumBins(); ++f) {
    for (std::size_t n = 0; n < spec.NumFrames(); ++n) {
      p[f * spec.NumFrames() + n] =
          std::max(std::norm(spec(f, n, channel)), kVarianceFloor);
    }
  }
  return p;
}

}  // namespace bss
