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

// Mean/variance statistics of the candidate normalizers. Every variance is
// the biased (population) estimate. Reductions run in a fixed sequential
// order, so results are reproducible bit for bit.

#ifndef SPARSESTMAX_NORMALIZERS_HPP_
#define SPARSESTMAX_NORMALIZERS_HPP_

#include <cstddef>
#include <string_view>
#include <vector>

#include "sparsestmax/tensor.hpp"

namespace ssn {

// Declaration order is the canonical order of a normalizer set.
enum class Normalizer { IN = 0, BN = 1, LN = 2, GN = 3 };

using Omega = std::vector<Normalizer>;

std::string_view normalizer_name(Normalizer n);
Normalizer parse_normalizer(std::string_view name);

// At least two distinct normalizers in canonical (IN, BN, LN, GN) order.
void validate_omega(const Omega& omega);
std::size_t omega_index(const Omega& omega, Normalizer n);

// Statistics of one normalizer. Each (n, c) position maps to one slot; the
// slot layout is IN: N x C, BN: C, LN: N, GN: N x groups.
struct Moments {
  Normalizer kind = Normalizer::IN;
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t groups = 1;  // GN only
  std::vector<double> mean;
  std::vector<double> var;

  std::size_t slot(std::size_t n, std::size_t c) const {
    switch (kind) {
      case Normalizer::IN: return n * channels + c;
      case Normalizer::BN: return c;
      case Normalizer::LN: return n;
      case Normalizer::GN: return n * groups + c / (channels / groups);
    }
    return 0;
  }
  std::size_t slot_count() const;
  // Number of tensor elements reduced into each slot for a tensor of `shape`.
  std::size_t slot_size(const Shape4& shape) const;
};

Moments stats_in(const Tensor4& x);
Moments stats_bn(const Tensor4& x);
Moments stats_ln(const Tensor4& x);
Moments stats_gn(const Tensor4& x, std::size_t groups);
Moments compute_stats(Normalizer kind, const Tensor4& x, std::size_t gn_groups);

// Moments with the slot layout of `kind` for a tensor of `shape`, zero-filled.
Moments empty_moments(Normalizer kind, const Shape4& shape, std::size_t gn_groups);

}  // namespace ssn

#endif  // SPARSESTMAX_NORMALIZERS_HPP_
