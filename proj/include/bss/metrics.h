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

#ifndef BSS_METRICS_H_
#define BSS_METRICS_H_

#include <span>
#include <string>
#include <vector>

#include "bss/common.h"

namespace bss {

// Scale-invariant SDR in dB. Returns +infinity when the estimate is an exact
// multiple of the reference; throws on a zero reference or length mismatch.
double SiSdr(std::span<const double> est, std::span<const double> ref);

struct EvalReport {
  std::vector<double> si_sdr;        // per reference, with chosen estimate
  std::vector<double> input_si_sdr;  // mixture vs reference; empty if unknown
  std::vector<double> improvement;   // si_sdr - input_si_sdr
  // permutation[j] = index of the estimate assigned to reference j.
  std::vector<std::size_t> permutation;
  double mean_si_sdr = 0.0;

  std::string ToJson() const;
  std::string ToText() const;
};

// Exhaustive search over assignments (J <= 8) maximizing the mean SI-SDR.
// Ties resolve to the lexicographically smallest permutation.
EvalReport PermuteAlign(const std::vector<std::vector<double>>& ests,
                        const std::vector<std::vector<double>>& refs);

// As above, plus input SI-SDR of `mixture` against each reference.
EvalReport Evaluate(const std::vector<std::vector<double>>& ests,
                    const std::vector<std::vector<double>>& refs,
                    std::span<const double> mixture);

}  // namespace bss

#endif  // BSS_METRICS_H_
