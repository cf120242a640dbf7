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

#ifndef BSS_COMMON_H_
#define BSS_COMMON_H_

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace bss {

using Complex = std::complex<double>;

// Lower bound applied to every source variance field.
inline constexpr double kVarianceFloor = 1e-10;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bss

#endif  // BSS_COMMON_H_
