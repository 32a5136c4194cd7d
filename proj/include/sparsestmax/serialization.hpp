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

#ifndef SPARSESTMAX_SERIALIZATION_HPP_
#define SPARSESTMAX_SERIALIZATION_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sparsestmax/ssn_layer.hpp"

namespace ssn {

// {"omega": ["IN","BN","LN"], "eps": 1e-5, "gn_groups": 32, "momentum": 0.1}
std::string layer_config_to_json(const LayerConfig& config);
LayerConfig layer_config_from_json(const std::string& text);

// Named real arrays: z_mean, z_var, gamma, beta, bn_running_mean,
// bn_running_var, plus frozen flags stored as 0/1 arrays of length 1.
using Checkpoint = std::map<std::string, std::vector<double>>;

Checkpoint to_checkpoint(const SsnParams& params);
SsnParams from_checkpoint(const Checkpoint& checkpoint);

std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

// Binary layout, all integers and reals little-endian:
//   "SSNCKPT1" | u32 count | count x { u32 name_len | name | u64 n | n x f64 }
std::vector<std::uint8_t> checkpoint_to_binary(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_binary(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ssn

#endif  // SPARSESTMAX_SERIALIZATION_HPP_
