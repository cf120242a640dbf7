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

#include "bss/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace bss {
namespace {

constexpr std::size_t kMaxExhaustiveSources = 8;

nlohmann::json DbValue(double db) {
  if (std::isinf(db)) return db > 0 ? "+inf" : "-inf";
  return db;
}

}  // namespace

double SiSdr(std::span<const double> est, std::span<const double> ref) {
  if (est.size() != ref.size()) {
    throw Error("SI-SDR: estimate has " + std::to_string(est.size()) +
                " samples, reference has " + std::to_string(ref.size()));
  }
  const double ref_energy = std::inner_product(ref.begin(), ref.end(),
                                               ref.begin(), 0.0);
  if (!(ref_energy > 0.0)) throw Error("SI-SDR: zero reference");
  const double beta =
      std::inner_product(est.begin(), est.end(), ref.begin(), 0.0) / ref_energy;
  double target = 0.0, noise = 0.0;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    const double s = beta * ref[t];
    const double e = est[t] - s;
    target += s * s;
    noise += e * e;
  }
  // Residuals at rounding level count as exact reconstruction.
  if (noise <= 1e-24 * target) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(target / noise);
}

EvalReport PermuteAlign(const std::vector<std::vector<double>>& ests,
                        const std::vector<std::vector<double>>& refs) {
  const std::size_t count = refs.size();
  if (ests.size() != count) {
    throw Error("got " + std::to_string(ests.size()) + " estimates for " +
                std::to_string(count) + " references");
  }
  if (count == 0) throw Error("nothing to evaluate");
  if (count > kMaxExhaustiveSources) {
    throw Error("exhaustive permutation search supports at most 8 sources; "
                "Hungarian assignment is out of scope");
  }
  // score[r][e]: SI-SDR of estimate e against reference r.
  std::vector<std::vector<double>> score(count, std::vector<double>(count));
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t e = 0; e < count; ++e) score[r][e] = SiSdr(ests[e], refs[r]);
  }
  std::vector<std::size_t> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_total = -std::numeric_limits<double>::infinity();
  bool first = true;
  do {
    double total = 0.0;
    for (std::size_t r = 0; r < count; ++r) total += score[r][perm[r]];
    if (first || total > best_total) {
      best_total = total;
      best = perm;
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  EvalReport report;
  report.permutation = best;
  for (std::size_t r = 0; r < count; ++r) {
    report.si_sdr.push_back(score[r][best[r]]);
  }
  report.mean_si_sdr = best_total / static_cast<double>(count);
  return report;
}

EvalReport Evaluate(const std::vector<std::vector<double>>& ests,
                    const std::vector<std::vector<double>>& refs,
                    std::span<const double> mixture) {
  EvalReport report = PermuteAlign(ests, refs);
  for (std::size_t r = 0; r < refs.size(); ++r) {
    report.input_si_sdr.push_back(SiSdr(mixture, refs[r]));
    report.improvement.push_back(report.si_sdr[r] - report.input_si_sdr[r]);
  }
  return report;
}

std::string EvalReport::ToJson() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["permutation"] = permutation;
  j["si_sdr_db"] = nlohmann::json::array();
  for (double v : si_sdr) j["si_sdr_db"].push_back(DbValue(v));
  j["mean_si_sdr_db"] = DbValue(mean_si_sdr);
  if (!input_si_sdr.empty()) {
    j["input_si_sdr_db"] = nlohmann::json::array();
    j["improvement_db"] = nlohmann::json::array();
    for (std::size_t r = 0; r < input_si_sdr.size(); ++r) {
      j["input_si_sdr_db"].push_back(DbValue(input_si_sdr[r]));
      j["improvement_db"].push_back(DbValue(improvement[r]));
    }
  }
  return j.dump(2);
}

std::string EvalReport::ToText() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "ref  est  SI-SDR[dB]";
  if (!input_si_sdr.empty()) os << "  input[dB]  improvement[dB]";
  os << '\n';
  for (std::size_t r = 0; r < si_sdr.size(); ++r) {
    os << std::setw(3) << r << "  " << std::setw(3) << permutation[r] << "  "
       << std::setw(10) << si_sdr[r];
    if (!input_si_sdr.empty()) {
      os << "  " << std::setw(9) << input_si_sdr[r] << "  " << std::setw(15)
         << improvement[r];
    }
    os << '\n';
  }
  os << "mean SI-SDR " << mean_si_sdr << " dB\n";
  return os.str();
}

}  // namespace bss
