/* Copyright 2026 The SparsestMax Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "sparsestmax/serialization.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "sparsestmax/error.hpp"

namespace ssn {

using nlohmann::json;

std::string layer_config_to_json(const LayerConfig& config) {
  json j;
  j["omega"] = json::array();
  for (Normalizer n : config.omega) j["omega"].push_back(std::string(normalizer_name(n)));
  j["eps"] = config.eps;
  j["gn_groups"] = config.gn_groups;
  j["momentum"] = config.momentum;
  return j.dump();
}

LayerConfig layer_config_from_json(const std::string& text) {
  LayerConfig config;
  try {
    const json j = json::parse(text);
    if (j.contains("omega")) {
      config.omega.clear();
      for (const auto& name : j.at("omega")) {
        config.omega.push_back(parse_normalizer(name.get<std::string>()));
      }
    }
    config.eps = j.value("eps", config.eps);
    config.gn_groups = j.value("gn_groups", config.gn_groups);
    config.momentum = j.value("momentum", config.momentum);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("layer config: ") + e.what());
  }
  config.validate();
  return config;
}

Checkpoint to_checkpoint(const SsnParams& params) {
  return {
      {"z_mean", params.gate.z_mean},
      {"z_var", params.gate.z_var},
      {"frozen_mean", {params.gate.frozen_mean ? 1.0 : 0.0}},
      {"frozen_var", {params.gate.frozen_var ? 1.0 : 0.0}},
      {"gamma", params.gamma},
      {"beta", params.beta},
      {"eps", {params.eps}},
      {"bn_running_mean", params.bn_running_mean},
      {"bn_running_var", params.bn_running_var},
  };
}

SsnParams from_checkpoint(const Checkpoint& checkpoint) {
  auto get = [&](const char* name) -> const std::vector<double>& {
    auto it = checkpoint.find(name);
    if (it == checkpoint.end()) {
      throw InvalidInput(std::string("checkpoint is missing array '") + name + "'");
    }
    return it->second;
  };
  auto scalar = [&](const char* name) {
    const auto& v = get(name);
    if (v.size() != 1) {
      throw InvalidInput(std::string("checkpoint array '") + name + "' must hold one value");
    }
    return v.front();
  };
  SsnParams p;
  p.gate.z_mean = get("z_mean");
  p.gate.z_var = get("z_var");
  p.gate.frozen_mean = scalar("frozen_mean") != 0.0;
  p.gate.frozen_var = scalar("frozen_var") != 0.0;
  p.gamma = get("gamma");
  p.beta = get("beta");
  p.eps = scalar("eps");
  p.bn_running_mean = get("bn_running_mean");
  p.bn_running_var = get("bn_running_var");
  p.validate(p.gamma.size(), p.gate.z_mean.size());
  return p;
}

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  json j = json::object();
  for (const auto& [name, values] : checkpoint) j[name] = values;
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  Checkpoint out;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw InvalidInput("checkpoint JSON must be an object");
    for (const auto& [name, values] : j.items()) {
      out[name] = values.get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("checkpoint JSON: ") + e.what());
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'S', 'S', 'N', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw InvalidInput("checkpoint binary is truncated");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> checkpoint_to_binary(const Checkpoint& checkpoint) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(checkpoint.size()));
  for (const auto& [name, values] : checkpoint) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_le<std::uint64_t>(out, values.size());
    for (double v : values) put_le<double>(out, v);
  }
  return out;
}

Checkpoint checkpoint_from_binary(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  if (in.string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw InvalidInput("checkpoint binary has a bad magic header");
  }
  Checkpoint out;
  const auto count = in.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = in.get<std::uint32_t>();
    std::string name = in.string(name_len);
    const auto n = in.get<std::uint64_t>();
    if (n > bytes.size() / 8) throw InvalidInput("checkpoint binary is truncated");
    std::vector<double> values(n);
    for (auto& v : values) v = in.get<double>();
    out[std::move(name)] = std::move(values);
  }
  if (!in.done()) throw InvalidInput("checkpoint binary has trailing bytes");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  if (path.extension() == ".json") {
    out << checkpoint_to_json(checkpoint);
  } else {
    const auto bytes = checkpoint_to_binary(checkpoint);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (path.extension() == ".json") {
    return checkpoint_from_json(std::string(bytes.begin(), bytes.end()));
  }
  return checkpoint_from_binary(bytes);
}

}  // namespace ssn
