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

// Sparse switchable normalization layer.
//
// The layer mixes per-normalizer statistics with two importance-ratio
// vectors, one for the means and one for the variances:
//
//   mu      = sum_k p_k  mu_k
//   sigma^2 = sum_k p'_k sigma^2_k
//   y       = gamma * (x - mu) / sqrt(sigma^2 + eps) + beta
//
// Each ratio vector is the SparsestMax projection of its own control
// parameters at the current radius. Once both ratios are one-hot the layer
// only needs the statistics of the selected normalizers.

#ifndef SPARSESTMAX_SSN_LAYER_HPP_
#define SPARSESTMAX_SSN_LAYER_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sparsestmax/conv.hpp"
#include "sparsestmax/normalizers.hpp"
#include "sparsestmax/simplex.hpp"
#include "sparsestmax/tensor.hpp"

namespace ssn {

struct LayerConfig {
  Omega omega{Normalizer::IN, Normalizer::BN, Normalizer::LN};
  double eps = 1e-5;
  std::size_t gn_groups = 32;
  double momentum = 0.1;

  void validate() const;
};

struct GateParams {
  Vector z_mean;
  Vector z_var;
  bool frozen_mean = false;
  bool frozen_var = false;

  static GateParams constant(std::size_t k, double z_init = 1.0);
};

enum class Mode { Train, Eval };

struct SsnParams {
  GateParams gate;
  Vector gamma;
  Vector beta;
  double eps = 1e-5;
  Vector bn_running_mean;
  Vector bn_running_var;
  Mode mode = Mode::Train;

  // gamma = 1, beta = 0, running stats (0, 1), both gates at z_init.
  static SsnParams init(std::size_t channels, std::size_t k, double z_init = 1.0,
                        double eps = 1e-5);
  void validate(std::size_t channels, std::size_t k) const;
};

struct SsnCache {
  Mode mode = Mode::Train;
  Omega omega;
  Tensor4 x;  // Train mode only
  // Parallel to omega. Entries skipped in Eval mode stay empty.
  std::vector<std::optional<Moments>> stats;
  Vector p;
  Vector pp;
  std::optional<ProjectionResult> gate_mean;
  std::optional<ProjectionResult> gate_var;
  bool frozen_mean = false;
  bool frozen_var = false;
  std::vector<double> mixed_mean;  // N x C
  std::vector<double> inv_std;     // N x C, 1/sqrt(sigma^2 + eps)
  Vector gamma;

  const Moments* find(Normalizer n) const;
};

struct SsnForward {
  Tensor4 y;
  SsnCache cache;
};

struct SsnGradients {
  Tensor4 dx;
  Vector dgamma;
  Vector dbeta;
  Vector dp;       // dL/dp
  Vector dpp;      // dL/dp'
  Vector dz_mean;  // empty when the forward pass used explicit ratios
  Vector dz_var;
};

// Gate ratios at radius r: {sparsestmax(z_mean, r), sparsestmax(z_var, r)}.
std::pair<ProjectionResult, ProjectionResult> gate_ratios(const GateParams& gate,
                                                          double r);

SsnForward ssn_forward(const Tensor4& x, const SsnParams& params, double r,
                       const LayerConfig& config);

// Forward pass with the mixture ratios given directly instead of through the
// gates. Backward still yields dp and dp' but no control-parameter gradients.
SsnForward ssn_forward_with_ratios(const Tensor4& x, const SsnParams& params,
                                   std::span<const double> p, std::span<const double> pp,
                                   const LayerConfig& config);

SsnGradients ssn_backward(const SsnCache& cache, const Tensor4& upstream);

// Exponential moving average of the batch-normalization statistics:
// running = (1 - momentum) * running + momentum * batch.
SsnParams update_running_stats(SsnParams params, const Moments& bn_batch,
                               double momentum);

struct Selection {
  Normalizer mean;
  Normalizer var;
};

// Throws NotConverged unless both ratio vectors are one-hot.
Selection select_normalizer(std::span<const double> p, std::span<const double> pp,
                            const Omega& omega);
Selection select_normalizer(const SsnParams& params, const LayerConfig& config, double r);

// Folds an Eval-mode BN-selected layer into the preceding convolution.
// Throws InvalidState unless both gates are one-hot at BN.
ConvWeights fold_bn_into_affine(const ConvWeights& conv, const SsnParams& params,
                                const LayerConfig& config, double r);

}  // namespace ssn

#endif  // SPARSESTMAX_SSN_LAYER_HPP_
