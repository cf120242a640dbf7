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

#ifndef BSS_LOG_H_
#define BSS_LOG_H_

#include <iostream>
#include <sstream>

namespace bss {

// Verbosity from the BSS_LOG environment variable (default 0).
int LogVerbosity();

class LogMessage {
 public:
  explicit LogMessage(int level) : level_(level) {}
  ~LogMessage() { std::clog << "[bss:" << level_ << "] " << buf_.str() << '\n'; }
  std::ostringstream& stream() { return buf_; }

 private:
  int level_;
  std::ostringstream buf_;
};

}  // namespace bss

#define BSS_LOG(level)                        \
  if ((level) > ::bss::LogVerbosity()) {      \
  } else                                      \
    ::bss::LogMessage(level).stream()

#endif  // BSS_LOG_H_
