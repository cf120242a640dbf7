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

#ifndef BSS_ORACLE_MODEL_H_
#define BSS_ORACLE_MODEL_H_

#include <vector>

#include "bss/lgm.h"

namespace bss {

// Source model that ignores the separated signal and returns fixed,
// externally known variances (e.g. the true source power spectrograms).
class OracleSourceModel : public SourceModel {
 public:
  explicit OracleSourceModel(std::vector<std::vector<double>> variances)
      : variances_(std::move(variances)) {}

  std::vector<double> Update(std::size_t j,
                             const SourceSpectrogram&) override {
    return variances_.at(j);
  }
  std::size_t NumSources() const override { return variances_.size(); }

 private:
  std::vector<std::vector<double>> variances_;
};

// |S(f, n)|^2 of a single-channel spectrogram, row-major [F x N], floored.
std::vector<double> PowerSpectrogram(const ComplexSpectrogram& spec,
                                     std::size_t channel = 0);

}  // namespace bss

#endif  // BSS_ORACLE_MODEL_H_
