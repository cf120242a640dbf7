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

#include "bss/neural/bundle.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace bss::neural {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

struct TensorSlot {
  const char* name;
  std::vector<float> Layer::*member;
};

std::vector<TensorSlot> SlotsFor(const Layer& layer) {
  std::vector<TensorSlot> slots = {{"weight", &Layer::weight},
                                   {"bias", &Layer::bias}};
  if (layer.layer_norm) {
    slots.push_back({"ln_gamma", &Layer::ln_gamma});
    slots.push_back({"ln_beta", &Layer::ln_beta});
  }
  return slots;
}

std::vector<std::size_t> ExpectedShape(const Layer& layer,
                                       const std::string& tensor) {
  const auto in = static_cast<std::size_t>(layer.in_ch);
  const auto out = static_cast<std::size_t>(layer.out_ch);
  const auto k = static_cast<std::size_t>(layer.kernel);
  if (tensor == "weight") {
    return layer.kind == LayerKind::kConv1d
               ? std::vector<std::size_t>{out, in, k}
               : std::vector<std::size_t>{in, out, k};
  }
  return {out};
}

std::size_t Product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

LayerRole ParseRole(const std::string& s, const std::string& layer) {
  if (s == "trunk") return LayerRole::kTrunk;
  if (s == "mu") return LayerRole::kMu;
  if (s == "logvar") return LayerRole::kLogVar;
  if (s == "class") return LayerRole::kClass;
  if (s == "decoder") return LayerRole::kDecoder;
  throw Error("layer '" + layer + "': unknown role '" + s + "'");
}

LayerKind ParseKind(const std::string& s, const std::string& layer) {
  if (s == "conv1d") return LayerKind::kConv1d;
  if (s == "deconv1d") return LayerKind::kDeconv1d;
  throw Error("layer '" + layer + "': unknown kind '" + s + "'");
}

Activation ParseActivation(const std::string& s, const std::string& layer) {
  if (s == "silu") return Activation::kSilu;
  if (s == "none") return Activation::kNone;
  throw Error("layer '" + layer + "': unknown activation '" + s + "'");
}

std::uint32_t Crc32(const char* data, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed large sections in chunks.
  while (len > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

template <typename T>
T ReadLe(const std::vector<char>& buf, std::size_t pos) {
  T value;
  std::memcpy(&value, buf.data() + pos, sizeof(T));
  return value;
}

template <typename T>
void AppendLe(std::vector<char>& buf, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

}  // namespace

std::string ToString(LayerRole role) {
  switch (role) {
    case LayerRole::kTrunk: return "trunk";
    case LayerRole::kMu: return "mu";
    case LayerRole::kLogVar: return "logvar";
    case LayerRole::kClass: return "class";
    case LayerRole::kDecoder: return "decoder";
  }
  return "?";
}

std::string ToString(LayerKind kind) {
  return kind == LayerKind::kConv1d ? "conv1d" : "deconv1d";
}

void Layer::Prepare() {
  taps.assign(static_cast<std::size_t>(kernel),
              Eigen::MatrixXd::Zero(out_ch, in_ch));
  for (int k = 0; k < kernel; ++k) {
    for (int o = 0; o < out_ch; ++o) {
      for (int i = 0; i < in_ch; ++i) {
        taps[k](o, i) = kind == LayerKind::kConv1d ? WeightAt(o, i, k)
                                                   : WeightAt(i, o, k);
      }
    }
  }
  bias_d = Eigen::Map<const Eigen::VectorXf>(bias.data(), out_ch).cast<double>();
  if (layer_norm) {
    gamma_d =
        Eigen::Map<const Eigen::VectorXf>(ln_gamma.data(), out_ch).cast<double>();
    beta_d =
        Eigen::Map<const Eigen::VectorXf>(ln_beta.data(), out_ch).cast<double>();
  }
}

std::vector<const Layer*> ModelBundle::LayersWithRole(LayerRole role) const {
  std::vector<const Layer*> out;
  for (const Layer& l : layers) {
    if (l.role == role) out.push_back(&l);
  }
  return out;
}

const Layer& ModelBundle::Head(LayerRole role) const {
  const auto found = LayersWithRole(role);
  if (found.size() != 1) {
    throw Error("model must have exactly one '" + ToString(role) +
                "' layer, found " + std::to_string(found.size()));
  }
  return *found.front();
}

int ModelBundle::EncoderStride() const {
  int stride = Head(LayerRole::kMu).stride;
  for (const Layer* l : LayersWithRole(LayerRole::kTrunk)) stride *= l->stride;
  return stride;
}

void ModelBundle::Validate() {
  if (latent_dim <= 0 || class_count <= 0 || freq_bins <= 0) {
    throw Error("latent_dim, class_count and freq_bins must be positive");
  }
  if (!(layer_norm_eps > 0.0)) throw Error("layer_norm_eps must be positive");

  for (Layer& l : layers) {
    const std::string where = "layer '" + l.name + "'";
    if (l.in_ch <= 0 || l.out_ch <= 0) {
      throw Error(where + ": channel counts must be positive");
    }
    if (l.kernel < 1 || l.kernel % 2 == 0) {
      throw Error(where + ": kernel must be odd and positive");
    }
    if (l.stride < 1) throw Error(where + ": stride must be >= 1");
    const bool is_decoder = l.role == LayerRole::kDecoder;
    if (is_decoder != (l.kind == LayerKind::kDeconv1d)) {
      throw Error(where + ": decoder layers must be deconv1d and encoder "
                          "layers conv1d");
    }
    for (const TensorSlot& slot : SlotsFor(l)) {
      const std::size_t want = Product(ExpectedShape(l, slot.name));
      if ((l.*slot.member).size() != want) {
        throw Error(where + ": tensor '" + slot.name + "' has " +
                    std::to_string((l.*slot.member).size()) +
                    " values, expected " + std::to_string(want));
      }
    }
  }

  int channels = freq_bins;
  std::string prev = "input";
  for (const Layer* l : LayersWithRole(LayerRole::kTrunk)) {
    if (l->in_ch != channels) {
      throw Error("layer '" + l->name + "': in_ch " + std::to_string(l->in_ch) +
                  " does not match " + std::to_string(channels) +
                  " channels from " + prev);
    }
    channels = l->out_ch;
    prev = "layer '" + l->name + "'";
  }
  const std::pair<LayerRole, int> heads[] = {{LayerRole::kMu, latent_dim},
                                             {LayerRole::kLogVar, latent_dim},
                                             {LayerRole::kClass, class_count}};
  for (const auto& [role, width] : heads) {
    const Layer& head = Head(role);
    if (head.in_ch != channels) {
      throw Error("layer '" + head.name + "': in_ch " +
                  std::to_string(head.in_ch) + " does not match trunk output " +
                  std::to_string(channels));
    }
    if (head.out_ch != width) {
      throw Error("layer '" + head.name + "': out_ch " +
                  std::to_string(head.out_ch) + ", expected " +
                  std::to_string(width));
    }
  }
  if (Head(LayerRole::kMu).stride != Head(LayerRole::kLogVar).stride) {
    throw Error("layer '" + Head(LayerRole::kLogVar).name +
                "': stride differs from the mu head");
  }

  const auto decoder = LayersWithRole(LayerRole::kDecoder);
  if (decoder.empty()) throw Error("model has no decoder layers");
  channels = latent_dim;
  int up = 1;
  for (const Layer* l : decoder) {
    if (l->in_ch != channels + class_count) {
      throw Error("layer '" + l->name + "': in_ch " + std::to_string(l->in_ch) +
                  ", expected " + std::to_string(channels) + " + " +
                  std::to_string(class_count) + " class channels");
    }
    channels = l->out_ch;
    up *= l->stride;
  }
  if (channels != freq_bins) {
    throw Error("layer '" + decoder.back()->name + "': out_ch " +
                std::to_string(channels) + ", expected freq_bins " +
                std::to_string(freq_bins));
  }
  if (up != EncoderStride()) {
    throw Error("decoder upsampling " + std::to_string(up) +
                " does not match encoder stride " +
                std::to_string(EncoderStride()));
  }
  for (Layer& l : layers) l.Prepare();
}

ModelBundle ParseModel(const std::vector<char>& bytes) {
  constexpr std::size_t kHeader = 4 + 4 + 8;
  if (bytes.size() < kHeader) throw Error("weight container truncated header");
  if (std::memcmp(bytes.data(), kContainerMagic, 4) != 0) {
    throw Error("bad magic: not a CAVW weight container");
  }
  const auto version = ReadLe<std::uint32_t>(bytes, 4);
  if (version != kContainerVersion) {
    throw Error("unsupported container version " + std::to_string(version));
  }
  const auto manifest_len = ReadLe<std::uint64_t>(bytes, 8);
  if (manifest_len > bytes.size() - kHeader) {
    throw Error("weight container truncated manifest");
  }
  json manifest;
  try {
    manifest = json::parse(bytes.begin() + kHeader,
                           bytes.begin() + kHeader +
                               static_cast<std::ptrdiff_t>(manifest_len));
  } catch (const json::exception& e) {
    throw Error(std::string("malformed manifest JSON: ") + e.what());
  }

  ModelBundle bundle;
  std::size_t total_values = 0;
  try {
    bundle.latent_dim = manifest.at("latent_dim").get<int>();
    bundle.class_count = manifest.at("class_count").get<int>();
    bundle.freq_bins = manifest.at("freq_bins").get<int>();
    bundle.feature = manifest.value("feature", bundle.feature);
    bundle.layer_norm_eps =
        manifest.value("layer_norm_eps", bundle.layer_norm_eps);
    for (const json& jl : manifest.at("layers")) {
      Layer l;
      l.name = jl.at("name").get<std::string>();
      l.role = ParseRole(jl.at("role").get<std::string>(), l.name);
      l.kind = ParseKind(jl.at("kind").get<std::string>(), l.name);
      l.in_ch = jl.at("in_ch").get<int>();
      l.out_ch = jl.at("out_ch").get<int>();
      l.kernel = jl.at("kernel").get<int>();
      l.stride = jl.at("stride").get<int>();
      l.activation =
          ParseActivation(jl.value("activation", std::string("none")), l.name);
      l.layer_norm = jl.value("layer_norm", false);
      const json& tensors = jl.at("tensors");
      const auto slots = SlotsFor(l);
      if (tensors.size() != slots.size()) {
        throw Error("layer '" + l.name + "': expected " +
                    std::to_string(slots.size()) + " tensors, manifest lists " +
                    std::to_string(tensors.size()));
      }
      for (std::size_t s = 0; s < slots.size(); ++s) {
        const auto name = tensors[s].at("name").get<std::string>();
        const auto shape =
            tensors[s].at("shape").get<std::vector<std::size_t>>();
        if (name != slots[s].name) {
          throw Error("layer '" + l.name + "': tensor " + std::to_string(s) +
                      " is '" + name + "', expected '" + slots[s].name + "'");
        }
        if (shape != ExpectedShape(l, name)) {
          throw Error("layer '" + l.name + "': tensor '" + name +
                      "' shape mismatch");
        }
        (l.*slots[s].member).resize(Product(shape));
        total_values += Product(shape);
      }
      bundle.layers.push_back(std::move(l));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("invalid manifest: ") + e.what());
  }

  const std::size_t tensor_pos = kHeader + manifest_len;
  const std::size_t tensor_bytes = total_values * sizeof(float);
  if (bytes.size() < tensor_pos + tensor_bytes + 4) {
    throw Error("checksum mismatch: tensor section truncated (" +
                std::to_string(bytes.size() - tensor_pos) + " bytes, need " +
                std::to_string(tensor_bytes + 4) + ")");
  }
  const auto stored = ReadLe<std::uint32_t>(bytes, tensor_pos + tensor_bytes);
  if (Crc32(bytes.data() + tensor_pos, tensor_bytes) != stored) {
    throw Error("checksum mismatch in tensor section");
  }
  std::size_t pos = tensor_pos;
  for (Layer& l : bundle.layers) {
    for (const TensorSlot& slot : SlotsFor(l)) {
      std::vector<float>& dst = l.*slot.member;
      std::memcpy(dst.data(), bytes.data() + pos, dst.size() * sizeof(float));
      pos += dst.size() * sizeof(float);
    }
  }
  bundle.Validate();
  return bundle;
}

std::vector<char> SerializeModel(const ModelBundle& bundle) {
  json manifest;
  manifest["format"] = "CAVW";
  manifest["latent_dim"] = bundle.latent_dim;
  manifest["class_count"] = bundle.class_count;
  manifest["freq_bins"] = bundle.freq_bins;
  manifest["feature"] = bundle.feature;
  manifest["layer_norm_eps"] = bundle.layer_norm_eps;
  manifest["layers"] = json::array();
  std::vector<char> tensors;
  for (const Layer& l : bundle.layers) {
    json jl;
    jl["name"] = l.name;
    jl["role"] = ToString(l.role);
    jl["kind"] = ToString(l.kind);
    jl["in_ch"] = l.in_ch;
    jl["out_ch"] = l.out_ch;
    jl["kernel"] = l.kernel;
    jl["stride"] = l.stride;
    jl["activation"] = l.activation == Activation::kSilu ? "silu" : "none";
    jl["layer_norm"] = l.layer_norm;
    jl["tensors"] = json::array();
    for (const TensorSlot& slot : SlotsFor(l)) {
      jl["tensors"].push_back(
          {{"name", slot.name}, {"shape", ExpectedShape(l, slot.name)}});
      const std::vector<float>& src = l.*slot.member;
      const char* raw = reinterpret_cast<const char*>(src.data());
      tensors.insert(tensors.end(), raw, raw + src.size() * sizeof(float));
    }
    manifest["layers"].push_back(std::move(jl));
  }
  const std::string text = manifest.dump();

  std::vector<char> out(kContainerMagic, kContainerMagic + 4);
  AppendLe<std::uint32_t>(out, kContainerVersion);
  AppendLe<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), tensors.begin(), tensors.end());
  AppendLe<std::uint32_t>(out, Crc32(tensors.data(), tensors.size()));
  return out;
}

ModelBundle LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return ParseModel(bytes);
}

void SaveModel(const ModelBundle& bundle, const std::string& path) {
  const std::vector<char> bytes = SerializeModel(bundle);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path);
}

}  // namespace bss::neural
