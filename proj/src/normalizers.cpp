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

#include "sparsestmax/normalizers.hpp"

#include <algorithm>
#include <string>

#include "sparsestmax/error.hpp"

namespace ssn {

std::string_view normalizer_name(Normalizer n) {
  switch (n) {
    case Normalizer::IN: return "IN";
    case Normalizer::BN: return "BN";
    case Normalizer::LN: return "LN";
    case Normalizer::GN: return "GN";
  }
  return "?";
}

Normalizer parse_normalizer(std::string_view name) {
  if (name == "IN") return Normalizer::IN;
  if (name == "BN") return Normalizer::BN;
  if (name == "LN") return Normalizer::LN;
  if (name == "GN") return Normalizer::GN;
  throw InvalidInput("unknown normalizer '" + std::string(name) +
                     "' (expected IN, BN, LN or GN)");
}

void validate_omega(const Omega& omega) {
  if (omega.size() < 2) {
    throw InvalidInput("normalizer set needs at least 2 members, got " +
                       std::to_string(omega.size()));
  }
  for (std::size_t i = 1; i < omega.size(); ++i) {
    if (static_cast<int>(omega[i - 1]) >= static_cast<int>(omega[i])) {
      throw InvalidInput("normalizer set must list distinct members in IN, BN, LN, GN order");
    }
  }
}

std::size_t omega_index(const Omega& omega, Normalizer n) {
  auto it = std::find(omega.begin(), omega.end(), n);
  if (it == omega.end()) {
    throw InvalidInput("normalizer " + std::string(normalizer_name(n)) +
                       " is not in the normalizer set");
  }
  return static_cast<std::size_t>(it - omega.begin());
}

std::size_t Moments::slot_count() const {
  switch (kind) {
    case Normalizer::IN: return batch * channels;
    case Normalizer::BN: return channels;
    case Normalizer::LN: return batch;
    case Normalizer::GN: return batch * groups;
  }
  return 0;
}

std::size_t Moments::slot_size(const Shape4& shape) const {
  switch (kind) {
    case Normalizer::IN: return shape.plane();
    case Normalizer::BN: return shape.n * shape.plane();
    case Normalizer::LN: return shape.c * shape.plane();
    case Normalizer::GN: return (shape.c / groups) * shape.plane();
  }
  return 0;
}

Moments empty_moments(Normalizer kind, const Shape4& shape, std::size_t gn_groups) {
  Moments m;
  m.kind = kind;
  m.batch = shape.n;
  m.channels = shape.c;
  if (kind == Normalizer::GN) {
    if (gn_groups == 0 || shape.c % gn_groups != 0) {
      throw InvalidInput("group normalization: " + std::to_string(shape.c) +
                         " channels are not divisible into " +
                         std::to_string(gn_groups) + " groups");
    }
    m.groups = gn_groups;
  }
  m.mean.assign(m.slot_count(), 0.0);
  m.var.assign(m.slot_count(), 0.0);
  return m;
}

Moments compute_stats(Normalizer kind, const Tensor4& x, std::size_t gn_groups) {
  const Shape4& s = x.shape();
  Moments m = empty_moments(kind, s, gn_groups);
  const double count = static_cast<double>(m.slot_size(s));

  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      double acc = m.mean[m.slot(n, c)];
      for (double v : x.plane(n, c)) acc += v;
      m.mean[m.slot(n, c)] = acc;
    }
  }
  for (double& v : m.mean) v /= count;

  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const std::size_t k = m.slot(n, c);
      const double mu = m.mean[k];
      double acc = m.var[k];
      for (double v : x.plane(n, c)) acc += (v - mu) * (v - mu);
      m.var[k] = acc;
    }
  }
  for (double& v : m.var) v /= count;
  return m;
}

Moments stats_in(const Tensor4& x) { return compute_stats(Normalizer::IN, x, 1); }
Moments stats_bn(const Tensor4& x) { return compute_stats(Normalizer::BN, x, 1); }
Moments stats_ln(const Tensor4& x) { return compute_stats(Normalizer::LN, x, 1); }
Moments stats_gn(const Tensor4& x, std::size_t groups) {
  return compute_stats(Normalizer::GN, x, groups);
}

}  // namespace ssn
