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

#include "sparsestmax/ssn_layer.hpp"

#include <cmath>
#include <string>

#include "sparsestmax/error.hpp"

namespace ssn {

void LayerConfig::validate() const {
  validate_omega(omega);
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidInput("eps must be positive");
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw InvalidInput("momentum must lie in [0, 1]");
  }
  if (gn_groups == 0) throw InvalidInput("gn_groups must be positive");
}

GateParams GateParams::constant(std::size_t k, double z_init) {
  GateParams g;
  g.z_mean.assign(k, z_init);
  g.z_var.assign(k, z_init);
  return g;
}

SsnParams SsnParams::init(std::size_t channels, std::size_t k, double z_init, double eps) {
  SsnParams p;
  p.gate = GateParams::constant(k, z_init);
  p.gamma.assign(channels, 1.0);
  p.beta.assign(channels, 0.0);
  p.eps = eps;
  p.bn_running_mean.assign(channels, 0.0);
  p.bn_running_var.assign(channels, 1.0);
  return p;
}

void SsnParams::validate(std::size_t channels, std::size_t k) const {
  if (gate.z_mean.size() != k || gate.z_var.size() != k) {
    throw InvalidInput("gate parameters must have one entry per normalizer (" +
                       std::to_string(k) + ")");
  }
  if (gamma.size() != channels || beta.size() != channels ||
      bn_running_mean.size() != channels || bn_running_var.size() != channels) {
    throw InvalidInput("per-channel parameters must have " + std::to_string(channels) +
                       " entries");
  }
  if (!(eps > 0.0)) throw InvalidInput("eps must be positive");
  for (double v : bn_running_var) {
    if (!(v >= 0.0)) throw InvalidInput("running variance must be non-negative");
  }
}

const Moments* SsnCache::find(Normalizer n) const {
  for (std::size_t k = 0; k < omega.size(); ++k) {
    if (omega[k] == n && stats[k]) return &*stats[k];
  }
  return nullptr;
}

std::pair<ProjectionResult, ProjectionResult> gate_ratios(const GateParams& gate,
                                                          double r) {
  return {sparsestmax(gate.z_mean, r), sparsestmax(gate.z_var, r)};
}

namespace {

SsnForward forward_impl(const Tensor4& x, const SsnParams& params,
                        std::span<const double> p, std::span<const double> pp,
                        const LayerConfig& config) {
  config.validate();
  x.check_finite("ssn_forward");
  const Shape4& s = x.shape();
  const std::size_t k_count = config.omega.size();
  params.validate(s.c, k_count);
  if (p.size() != k_count || pp.size() != k_count) {
    throw InvalidInput("ratio vectors must have one entry per normalizer");
  }

  SsnForward out;
  SsnCache& cache = out.cache;
  cache.mode = params.mode;
  cache.omega = config.omega;
  if (params.mode == Mode::Train) cache.x = x;
  cache.p.assign(p.begin(), p.end());
  cache.pp.assign(pp.begin(), pp.end());
  cache.gamma = params.gamma;
  cache.frozen_mean = params.gate.frozen_mean;
  cache.frozen_var = params.gate.frozen_var;
  cache.stats.resize(k_count);

  for (std::size_t k = 0; k < k_count; ++k) {
    const Normalizer kind = config.omega[k];
    if (params.mode == Mode::Eval) {
      if (p[k] == 0.0 && pp[k] == 0.0) continue;
      if (kind == Normalizer::BN) {
        Moments m = empty_moments(kind, s, config.gn_groups);
        m.mean = params.bn_running_mean;
        m.var = params.bn_running_var;
        cache.stats[k] = std::move(m);
        continue;
      }
    }
    cache.stats[k] = compute_stats(kind, x, config.gn_groups);
  }

  const std::size_t planes = s.n * s.c;
  cache.mixed_mean.assign(planes, 0.0);
  cache.inv_std.assign(planes, 0.0);
  out.y = Tensor4(s);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      double mu = 0.0;
      double var = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) {
        if (!cache.stats[k]) continue;
        const Moments& m = *cache.stats[k];
        const std::size_t slot = m.slot(n, c);
        mu += p[k] * m.mean[slot];
        var += pp[k] * m.var[slot];
      }
      const double inv = 1.0 / std::sqrt(var + params.eps);
      cache.mixed_mean[n * s.c + c] = mu;
      cache.inv_std[n * s.c + c] = inv;

      const double g = params.gamma[c];
      const double b = params.beta[c];
      auto src = x.plane(n, c);
      auto dst = out.y.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = g * (src[i] - mu) * inv + b;
      }
    }
  }
  return out;
}

}  // namespace

SsnForward ssn_forward(const Tensor4& x, const SsnParams& params, double r,
                       const LayerConfig& config) {
  config.validate();
  auto [mean_gate, var_gate] = gate_ratios(params.gate, r);
  SsnForward out = forward_impl(x, params, mean_gate.p, var_gate.p, config);
  out.cache.gate_mean = std::move(mean_gate);
  out.cache.gate_var = std::move(var_gate);
  return out;
}

SsnForward ssn_forward_with_ratios(const Tensor4& x, const SsnParams& params,
                                   std::span<const double> p, std::span<const double> pp,
                                   const LayerConfig& config) {
  return forward_impl(x, params, p, pp, config);
}

SsnGradients ssn_backward(const SsnCache& cache, const Tensor4& upstream) {
  if (cache.mode != Mode::Train) {
    throw InvalidState("ssn_backward: cache comes from an Eval-mode forward pass");
  }
  const Shape4& s = cache.x.shape();
  if (!(upstream.shape() == s)) {
    throw InvalidInput("ssn_backward: upstream shape " + upstream.shape().str() +
                       " does not match input shape " + s.str());
  }
  const std::size_t k_count = cache.omega.size();
  for (const auto& m : cache.stats) {
    if (!m) throw InvalidState("ssn_backward: cache is missing normalizer statistics");
  }

  SsnGradients g;
  g.dx = Tensor4(s);
  g.dgamma.assign(s.c, 0.0);
  g.dbeta.assign(s.c, 0.0);
  g.dp.assign(k_count, 0.0);
  g.dpp.assign(k_count, 0.0);

  // Gradients w.r.t. each normalizer's own statistics, in its slot layout.
  std::vector<std::vector<double>> d_mean(k_count), d_var(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    d_mean[k].assign(cache.stats[k]->slot_count(), 0.0);
    d_var[k].assign(cache.stats[k]->slot_count(), 0.0);
  }

  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const std::size_t nc = n * s.c + c;
      const double mu = cache.mixed_mean[nc];
      const double inv = cache.inv_std[nc];
      const double gamma = cache.gamma[c];
      auto xs = cache.x.plane(n, c);
      auto gs = upstream.plane(n, c);
      auto dxs = g.dx.plane(n, c);

      double sum_g = 0.0;
      double sum_g_xhat = 0.0;
      double sum_g_centered = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double centered = xs[i] - mu;
        sum_g += gs[i];
        sum_g_xhat += gs[i] * centered * inv;
        sum_g_centered += gs[i] * centered;
        dxs[i] = gs[i] * gamma * inv;
      }
      g.dbeta[c] += sum_g;
      g.dgamma[c] += sum_g_xhat;

      const double d_mu = -gamma * inv * sum_g;
      const double d_sigma2 = -0.5 * gamma * inv * inv * inv * sum_g_centered;
      for (std::size_t k = 0; k < k_count; ++k) {
        const Moments& m = *cache.stats[k];
        const std::size_t slot = m.slot(n, c);
        g.dp[k] += d_mu * m.mean[slot];
        g.dpp[k] += d_sigma2 * m.var[slot];
        d_mean[k][slot] += cache.p[k] * d_mu;
        d_var[k][slot] += cache.pp[k] * d_sigma2;
      }
    }
  }

  // d mu_k / dx = 1/M and d sigma^2_k / dx = 2 (x - mu_k) / M over each slot.
  for (std::size_t k = 0; k < k_count; ++k) {
    const Moments& m = *cache.stats[k];
    const double inv_count = 1.0 / static_cast<double>(m.slot_size(s));
    for (std::size_t n = 0; n < s.n; ++n) {
      for (std::size_t c = 0; c < s.c; ++c) {
        const std::size_t slot = m.slot(n, c);
        const double gm = d_mean[k][slot];
        const double gv = d_var[k][slot];
        if (gm == 0.0 && gv == 0.0) continue;
        const double mu_k = m.mean[slot];
        auto xs = cache.x.plane(n, c);
        auto dxs = g.dx.plane(n, c);
        for (std::size_t i = 0; i < xs.size(); ++i) {
          dxs[i] += (gm + 2.0 * gv * (xs[i] - mu_k)) * inv_count;
        }
      }
    }
  }

  if (cache.gate_mean) {
    g.dz_mean = cache.frozen_mean ? Vector(k_count, 0.0)
                                  : sparsestmax_vjp(*cache.gate_mean, g.dp);
  }
  if (cache.gate_var) {
    g.dz_var = cache.frozen_var ? Vector(k_count, 0.0)
                                : sparsestmax_vjp(*cache.gate_var, g.dpp);
  }
  return g;
}

SsnParams update_running_stats(SsnParams params, const Moments& bn_batch, double momentum) {
  if (bn_batch.kind != Normalizer::BN) {
    throw InvalidInput("update_running_stats: expected batch-normalization statistics");
  }
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw InvalidInput("update_running_stats: momentum must lie in [0, 1]");
  }
  const std::size_t c = params.bn_running_mean.size();
  if (bn_batch.mean.size() != c || bn_batch.var.size() != c ||
      params.bn_running_var.size() != c) {
    throw InvalidInput("update_running_stats: channel count mismatch");
  }
  for (std::size_t i = 0; i < c; ++i) {
    params.bn_running_mean[i] =
        (1.0 - momentum) * params.bn_running_mean[i] + momentum * bn_batch.mean[i];
    params.bn_running_var[i] =
        (1.0 - momentum) * params.bn_running_var[i] + momentum * bn_batch.var[i];
  }
  return params;
}

Selection select_normalizer(std::span<const double> p, std::span<const double> pp,
                            const Omega& omega) {
  if (p.size() != omega.size() || pp.size() != omega.size()) {
    throw InvalidInput("select_normalizer: ratio length does not match the normalizer set");
  }
  if (!is_one_hot(p)) throw NotConverged("mean importance ratios are not one-hot");
  if (!is_one_hot(pp)) throw NotConverged("variance importance ratios are not one-hot");
  return {omega[argmax_index(p)], omega[argmax_index(pp)]};
}

Selection select_normalizer(const SsnParams& params, const LayerConfig& config, double r) {
  auto [mean_gate, var_gate] = gate_ratios(params.gate, r);
  return select_normalizer(mean_gate.p, var_gate.p, config.omega);
}

ConvWeights fold_bn_into_affine(const ConvWeights& conv, const SsnParams& params,
                                const LayerConfig& config, double r) {
  Selection sel{};
  try {
    sel = select_normalizer(params, config, r);
  } catch (const NotConverged& e) {
    throw InvalidState(std::string("fold_bn_into_affine: ") + e.what());
  }
  if (sel.mean != Normalizer::BN || sel.var != Normalizer::BN) {
    throw InvalidState("fold_bn_into_affine: layer does not select BN for both statistics");
  }
  const std::size_t c = conv.out_channels;
  params.validate(c, config.omega.size());

  ConvWeights folded = conv;
  if (folded.bias.empty()) folded.bias.assign(c, 0.0);
  const std::size_t per_filter = conv.in_channels * conv.kernel_h * conv.kernel_w;
  for (std::size_t o = 0; o < c; ++o) {
    const double scale = params.gamma[o] / std::sqrt(params.bn_running_var[o] + params.eps);
    for (std::size_t i = 0; i < per_filter; ++i) folded.weight[o * per_filter + i] *= scale;
    folded.bias[o] = (folded.bias[o] - params.bn_running_mean[o]) * scale + params.beta[o];
  }
  return folded;
}

}  // namespace ssn
