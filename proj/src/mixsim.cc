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

#include "bss/mixsim.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "bss/fft.h"
#include "json.hpp"

namespace bss {
namespace {

using nlohmann::json;

constexpr double kEnvelopeFloor = 1e-4;

double BandPower(const Resonance& r, double freq) {
  const double d = (freq - r.center_hz) / r.bandwidth_hz;
  return std::exp(-0.5 * d * d);
}

double Condition(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1)
                               : std::numeric_limits<double>::infinity();
}

[[noreturn]] void SchemaError(const std::string& path, const std::string& msg) {
  throw Error(path + ": " + msg);
}

double GetNumber(const json& j, const std::string& path) {
  if (!j.is_number()) SchemaError(path, "expected a number");
  return j.get<double>();
}

const json* Find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

}  // namespace

void SourceClassSpec::Validate(int sample_rate) const {
  const double nyquist = 0.5 * sample_rate;
  if (resonances.empty()) throw Error("class " + std::to_string(class_id) +
                                      " has no resonances");
  for (const Resonance& r : resonances) {
    if (r.mod_rate_hz && !(*r.mod_rate_hz >= 0.0)) {
      throw Error("class " + std::to_string(class_id) +
                  ": modulation rate must be nonnegative");
    }
    if (!(r.center_hz > 0.0 && r.center_hz < nyquist)) {
      throw Error("class " + std::to_string(class_id) +
                  ": resonance centre must lie below Nyquist");
    }
    if (!(r.bandwidth_hz > 0.0)) {
      throw Error("class " + std::to_string(class_id) +
                  ": resonance bandwidth must be positive");
    }
  }
  if (!(mod_depth >= 0.0 && mod_depth <= 1.0)) {
    throw Error("class " + std::to_string(class_id) +
                ": modulation depth must lie in [0, 1]");
  }
  if (!(band_mod_depth >= 0.0 && band_mod_depth <= 1.0)) {
    throw Error("class " + std::to_string(class_id) +
                ": band modulation depth must lie in [0, 1]");
  }
  if (!(mod_rate_hz >= 0.0)) {
    throw Error("class " + std::to_string(class_id) +
                ": modulation rate must be nonnegative");
  }
}

std::vector<SourceClassSpec> DefaultClassSpecs() {
  return {
      {0, {{350.0, 120.0, 3.0}, {900.0, 200.0, 4.6}}, 3.0, 0.9},
      {1, {{2200.0, 300.0, 5.0}, {3500.0, 400.0, 2.7}}, 5.0, 0.9},
  };
}

std::vector<std::vector<double>> GenSources(
    const std::vector<SourceClassSpec>& classes, double duration_s,
    int sample_rate, std::uint64_t seed) {
  if (classes.empty()) throw Error("at least one source class is required");
  if (!(duration_s > 0.0) || sample_rate <= 0) {
    throw Error("duration and sample rate must be positive");
  }
  const auto len = static_cast<std::size_t>(
      std::llround(duration_s * static_cast<double>(sample_rate)));
  if (len < 2) throw Error("duration too short");
  RealFft fft(len);
  std::vector<std::vector<double>> out;
  out.reserve(classes.size());
  for (std::size_t j = 0; j < classes.size(); ++j) {
    const SourceClassSpec& spec = classes[j];
    spec.Validate(sample_rate);
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(j)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

    // Band b < R is resonance b; band R is the broadband floor. All bands
    // share the class modulation.
    const double class_phi = phase(rng);
    const std::size_t bands = spec.resonances.size() + 1;
    std::vector<double> x(len, 0.0), band(len);
    std::vector<Complex> bins(fft.NumBins());
    for (std::size_t b = 0; b < bands; ++b) {
      for (double& v : band) v = normal(rng);
      fft.Forward(band, bins);
      for (std::size_t k = 0; k < bins.size(); ++k) {
        const double freq = static_cast<double>(k) * sample_rate /
                            static_cast<double>(len);
        bins[k] *= std::sqrt(b < spec.resonances.size()
                                 ? BandPower(spec.resonances[b], freq)
                                 : kEnvelopeFloor);
      }
      fft.Inverse(bins, band);
      const double class_w = 2.0 * std::numbers::pi * spec.mod_rate_hz /
                             static_cast<double>(sample_rate);
      // Resonances with their own rate get a second, band-specific factor.
      const bool own = b < spec.resonances.size() &&
                       spec.resonances[b].mod_rate_hz.has_value();
      const double band_w = own ? 2.0 * std::numbers::pi *
                                      *spec.resonances[b].mod_rate_hz /
                                      static_cast<double>(sample_rate)
                                : 0.0;
      const double band_phi = own ? phase(rng) : 0.0;
      const double band_depth = own ? spec.band_mod_depth : 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        const double tt = static_cast<double>(t);
        const double m = 0.5 * (1.0 + std::sin(class_w * tt + class_phi));
        const double mb = 0.5 * (1.0 + std::sin(band_w * tt + band_phi));
        x[t] += band[t] * (1.0 - spec.mod_depth + spec.mod_depth * m) *
                (1.0 - band_depth + band_depth * mb);
      }
    }
    double energy = 0.0;
    for (double v : x) energy += v * v;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& v : x) v *= scale;
    out.push_back(std::move(x));
  }
  return out;
}

double SpectralCentroid(const std::vector<double>& x, int sample_rate) {
  RealFft fft(x.size());
  std::vector<Complex> bins(fft.NumBins());
  fft.Forward(x, bins);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double p = std::norm(bins[k]);
    num += p * static_cast<double>(k) * sample_rate /
           static_cast<double>(x.size());
    den += p;
  }
  if (!(den > 0.0)) throw Error("centroid of a silent signal");
  return num / den;
}

Waveform MixInstantaneous(const std::vector<std::vector<double>>& sources,
                          const Eigen::MatrixXd& mixing, int sample_rate) {
  if (static_cast<std::size_t>(mixing.cols()) != sources.size()) {
    throw Error("mixing matrix has " + std::to_string(mixing.cols()) +
                " columns for " + std::to_string(sources.size()) + " sources");
  }
  const std::size_t len = sources.empty() ? 0 : sources.front().size();
  Waveform out(static_cast<std::size_t>(mixing.rows()), len, sample_rate);
  for (std::size_t j = 0; j < sources.size(); ++j) {
    if (sources[j].size() != len) throw Error("sources differ in length");
    for (Eigen::Index i = 0; i < mixing.rows(); ++i) {
      const double a = mixing(i, static_cast<Eigen::Index>(j));
      std::vector<double>& dst = out.channels[i];
      for (std::size_t t = 0; t < len; ++t) dst[t] += a * sources[j][t];
    }
  }
  return out;
}

Waveform MixFir(const std::vector<std::vector<double>>& sources,
                const FirTaps& taps, int sample_rate) {
  const std::size_t mics = taps.size();
  const std::size_t len = sources.empty() ? 0 : sources.front().size();
  Waveform out(mics, len, sample_rate);
  for (std::size_t i = 0; i < mics; ++i) {
    if (taps[i].size() != sources.size()) {
      throw Error("FIR tap set for mic " + std::to_string(i) + " has " +
                  std::to_string(taps[i].size()) + " sources, expected " +
                  std::to_string(sources.size()));
    }
    std::vector<double>& dst = out.channels[i];
    for (std::size_t j = 0; j < sources.size(); ++j) {
      const std::vector<double>& h = taps[i][j];
      const std::vector<double>& s = sources[j];
      if (s.size() != len) throw Error("sources differ in length");
      for (std::size_t t = 0; t < len; ++t) {
        double acc = 0.0;
        const std::size_t max_l = std::min(h.size(), t + 1);
        for (std::size_t l = 0; l < max_l; ++l) acc += h[l] * s[t - l];
        dst[t] += acc;
      }
    }
  }
  return out;
}

Eigen::MatrixXd RandomMixingMatrix(std::size_t mics, std::size_t sources,
                                   std::uint64_t seed, double max_cond) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(mics),
                    static_cast<Eigen::Index>(sources));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = uniform(rng);
    }
    if (Condition(a) < max_cond) return a;
  }
  throw Error("could not draw a well-conditioned mixing matrix");
}

FirTaps RandomFirTaps(std::size_t mics, std::size_t sources,
                      std::size_t length, std::uint64_t seed) {
  if (length == 0) throw Error("FIR length must be positive");
  const Eigen::MatrixXd direct = RandomMixingMatrix(mics, sources, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double decay = std::max(1.0, static_cast<double>(length) / 4.0);
  FirTaps taps(mics, std::vector<std::vector<double>>(sources));
  for (std::size_t i = 0; i < mics; ++i) {
    for (std::size_t j = 0; j < sources; ++j) {
      std::vector<double>& h = taps[i][j];
      h.assign(length, 0.0);
      const double a = direct(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(j));
      h[0] = a;
      for (std::size_t l = 1; l < length; ++l) {
        h[l] = 0.2 * std::abs(a) * normal(rng) *
               std::exp(-static_cast<double>(l) / decay);
      }
    }
  }
  return taps;
}

SynthSpec ParseSynthSpec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("/: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) SchemaError("/", "expected an object");
  SynthSpec spec;
  if (const json* v = Find(doc, "schema_version")) {
    if (!v->is_number_integer() || v->get<int>() != 1) {
      SchemaError("/schema_version", "only version 1 is supported");
    }
  }
  if (const json* v = Find(doc, "sample_rate")) {
    if (!v->is_number_integer() || v->get<int>() <= 0) {
      SchemaError("/sample_rate", "expected a positive integer");
    }
    spec.sample_rate = v->get<int>();
  }
  if (const json* v = Find(doc, "duration_s")) {
    spec.duration_s = GetNumber(*v, "/duration_s");
    if (!(spec.duration_s > 0.0)) SchemaError("/duration_s", "must be positive");
  }
  if (const json* v = Find(doc, "seed")) {
    if (!v->is_number_unsigned()) {
      SchemaError("/seed", "expected a nonnegative integer");
    }
    spec.seed = v->get<std::uint64_t>();
  }
  if (const json* v = Find(doc, "classes")) {
    if (!v->is_array() || v->empty()) {
      SchemaError("/classes", "expected a non-empty array");
    }
    spec.classes.clear();
    for (std::size_t c = 0; c < v->size(); ++c) {
      const std::string path = "/classes/" + std::to_string(c);
      const json& jc = (*v)[c];
      if (!jc.is_object()) SchemaError(path, "expected an object");
      SourceClassSpec cls;
      const json* id = Find(jc, "class_id");
      if (id == nullptr || !id->is_number_integer()) {
        SchemaError(path + "/class_id", "expected an integer");
      }
      cls.class_id = id->get<int>();
      const json* res = Find(jc, "resonances");
      if (res == nullptr || !res->is_array() || res->empty()) {
        SchemaError(path + "/resonances", "expected a non-empty array");
      }
      for (std::size_t r = 0; r < res->size(); ++r) {
        const std::string rp = path + "/resonances/" + std::to_string(r);
        const json& jr = (*res)[r];
        if (!jr.is_object()) SchemaError(rp, "expected an object");
        const json* fc = Find(jr, "center_hz");
        const json* bw = Find(jr, "bandwidth_hz");
        if (fc == nullptr) SchemaError(rp + "/center_hz", "missing");
        if (bw == nullptr) SchemaError(rp + "/bandwidth_hz", "missing");
        Resonance res_spec{GetNumber(*fc, rp + "/center_hz"),
                           GetNumber(*bw, rp + "/bandwidth_hz"),
                           std::nullopt};
        if (const json* m = Find(jr, "mod_rate_hz")) {
          res_spec.mod_rate_hz = GetNumber(*m, rp + "/mod_rate_hz");
        }
        cls.resonances.push_back(res_spec);
      }
      if (const json* m = Find(jc, "mod_rate_hz")) {
        cls.mod_rate_hz = GetNumber(*m, path + "/mod_rate_hz");
      }
      if (const json* m = Find(jc, "mod_depth")) {
        cls.mod_depth = GetNumber(*m, path + "/mod_depth");
      }
      if (const json* m = Find(jc, "band_mod_depth")) {
        cls.band_mod_depth = GetNumber(*m, path + "/band_mod_depth");
      }
      try {
        cls.Validate(spec.sample_rate);
      } catch (const Error& e) {
        SchemaError(path, e.what());
      }
      spec.classes.push_back(std::move(cls));
    }
  }
  if (const json* v = Find(doc, "sources")) {
    if (!v->is_array() || v->empty()) {
      SchemaError("/sources", "expected a non-empty array of class ids");
    }
    spec.source_classes.clear();
    for (std::size_t s = 0; s < v->size(); ++s) {
      if (!(*v)[s].is_number_integer()) {
        SchemaError("/sources/" + std::to_string(s), "expected a class id");
      }
      spec.source_classes.push_back((*v)[s].get<int>());
    }
  }
  for (std::size_t s = 0; s < spec.source_classes.size(); ++s) {
    bool known = false;
    for (const auto& c : spec.classes) known |= c.class_id == spec.source_classes[s];
    if (!known) {
      SchemaError("/sources/" + std::to_string(s),
                  "unknown class id " + std::to_string(spec.source_classes[s]));
    }
  }
  const std::size_t num_src = spec.source_classes.size();
  if (const json* mix = Find(doc, "mix")) {
    if (!mix->is_object()) SchemaError("/mix", "expected an object");
    if (const json* mode = Find(*mix, "mode")) {
      const std::string m = mode->is_string() ? mode->get<std::string>() : "";
      if (m == "instantaneous") {
        spec.mode = MixMode::kInstantaneous;
      } else if (m == "fir") {
        spec.mode = MixMode::kFir;
      } else {
        SchemaError("/mix/mode", "expected \"instantaneous\" or \"fir\"");
      }
    }
    if (const json* m = Find(*mix, "matrix")) {
      if (!m->is_array() || m->size() != num_src) {
        SchemaError("/mix/matrix", "expected " + std::to_string(num_src) +
                                       " rows");
      }
      spec.mixing.resize(static_cast<Eigen::Index>(num_src),
                         static_cast<Eigen::Index>(num_src));
      for (std::size_t i = 0; i < num_src; ++i) {
        const std::string rp = "/mix/matrix/" + std::to_string(i);
        if (!(*m)[i].is_array() || (*m)[i].size() != num_src) {
          SchemaError(rp, "expected " + std::to_string(num_src) + " columns");
        }
        for (std::size_t j = 0; j < num_src; ++j) {
          spec.mixing(static_cast<Eigen::Index>(i),
                      static_cast<Eigen::Index>(j)) =
              GetNumber((*m)[i][j], rp + "/" + std::to_string(j));
        }
      }
    }
    if (const json* t = Find(*mix, "taps")) {
      if (!t->is_array() || t->size() != num_src) {
        SchemaError("/mix/taps", "expected " + std::to_string(num_src) +
                                     " microphones");
      }
      spec.taps.assign(num_src, std::vector<std::vector<double>>(num_src));
      for (std::size_t i = 0; i < num_src; ++i) {
        for (std::size_t j = 0; j < num_src; ++j) {
          const std::string tp = "/mix/taps/" + std::to_string(i) + "/" +
                                 std::to_string(j);
          const json* h = (*t)[i].is_array() && (*t)[i].size() == num_src
                              ? &(*t)[i][j]
                              : nullptr;
          if (h == nullptr || !h->is_array() || h->empty()) {
            SchemaError(tp, "expected a non-empty tap array");
          }
          for (std::size_t l = 0; l < h->size(); ++l) {
            spec.taps[i][j].push_back(
                GetNumber((*h)[l], tp + "/" + std::to_string(l)));
          }
        }
      }
    }
    if (const json* l = Find(*mix, "fir_length")) {
      if (!l->is_number_unsigned() || l->get<std::size_t>() == 0) {
        SchemaError("/mix/fir_length", "expected a positive integer");
      }
      spec.fir_length = l->get<std::size_t>();
    }
  }
  return spec;
}

SynthOutput Synthesize(const SynthSpec& spec) {
  std::vector<SourceClassSpec> per_source;
  for (int id : spec.source_classes) {
    auto it = std::find_if(spec.classes.begin(), spec.classes.end(),
                           [id](const auto& c) { return c.class_id == id; });
    if (it == spec.classes.end()) {
      throw Error("unknown class id " + std::to_string(id));
    }
    per_source.push_back(*it);
  }
  SynthOutput out;
  out.sources = GenSources(per_source, spec.duration_s, spec.sample_rate,
                           spec.seed);
  const std::size_t num_src = out.sources.size();
  if (spec.mode == MixMode::kInstantaneous) {
    out.mixing = spec.mixing.size() > 0
                     ? spec.mixing
                     : RandomMixingMatrix(num_src, num_src, spec.seed + 1);
    out.mixture = MixInstantaneous(out.sources, out.mixing, spec.sample_rate);
    for (std::size_t j = 0; j < num_src; ++j) {
      out.images.push_back(MixInstantaneous(
          {out.sources[j]}, out.mixing.col(static_cast<Eigen::Index>(j)),
          spec.sample_rate));
    }
  } else {
    out.taps = !spec.taps.empty()
                   ? spec.taps
                   : RandomFirTaps(num_src, num_src, spec.fir_length,
                                   spec.seed + 1);
    out.mixture = MixFir(out.sources, out.taps, spec.sample_rate);
    for (std::size_t j = 0; j < num_src; ++j) {
      FirTaps single(out.taps.size());
      for (std::size_t i = 0; i < out.taps.size(); ++i) {
        single[i] = {out.taps[i][j]};
      }
      out.images.push_back(MixFir({out.sources[j]}, single, spec.sample_rate));
    }
  }
  return out;
}

}  // namespace bss
