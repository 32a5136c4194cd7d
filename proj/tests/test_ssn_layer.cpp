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

#include <cmath>
#include <random>

#include "doctest.h"
#include "sparsestmax/error.hpp"
#include "sparsestmax/ssn_layer.hpp"
#include "test_util.hpp"

using namespace ssn;
using testutil::max_abs_diff;

namespace {

const Omega kThree{Normalizer::IN, Normalizer::BN, Normalizer::LN};
const Omega kFour{Normalizer::IN, Normalizer::BN, Normalizer::LN, Normalizer::GN};

// Mean and biased variance over the elements selected by `take`.
template <typename Take>
std::pair<double, double> moments_where(const Tensor4& x, Take take) {
  const Shape4 s = x.shape();
  double sum = 0.0, count = 0.0;
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < s.h; ++i)
        for (std::size_t j = 0; j < s.w; ++j)
          if (take(n, c)) {
            sum += x(n, c, i, j);
            count += 1.0;
          }
  const double mean = sum / count;
  double ss = 0.0;
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < s.h; ++i)
        for (std::size_t j = 0; j < s.w; ++j)
          if (take(n, c)) ss += (x(n, c, i, j) - mean) * (x(n, c, i, j) - mean);
  return {mean, ss / count};
}

std::pair<double, double> scalar_moments(const Tensor4& x, Normalizer kind, std::size_t n,
                                         std::size_t c, std::size_t groups) {
  const std::size_t per = x.shape().c / groups;
  switch (kind) {
    case Normalizer::IN:
      return moments_where(x, [&](std::size_t a, std::size_t b) { return a == n && b == c; });
    case Normalizer::BN:
      return moments_where(x, [&](std::size_t, std::size_t b) { return b == c; });
    case Normalizer::LN:
      return moments_where(x, [&](std::size_t a, std::size_t) { return a == n; });
    case Normalizer::GN:
      return moments_where(x, [&](std::size_t a, std::size_t b) { return a == n && b / per == c / per; });
  }
  return {0.0, 0.0};
}

// y_ncij = gamma_c (h_ncij - sum_k p_k mu_k) / sqrt(sum_k p'_k var_k + eps) + beta_c
Tensor4 scalar_ssn(const Tensor4& x, const Omega& omega, const Vector& p, const Vector& pp,
                   const Vector& gamma, const Vector& beta, double eps, std::size_t groups) {
  const Shape4 s = x.shape();
  Tensor4 y(s);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      double mu = 0.0, var = 0.0;
      for (std::size_t k = 0; k < omega.size(); ++k) {
        const auto [m, v] = scalar_moments(x, omega[k], n, c, groups);
        mu += p[k] * m;
        var += pp[k] * v;
      }
      for (std::size_t i = 0; i < s.h; ++i)
        for (std::size_t j = 0; j < s.w; ++j)
          y(n, c, i, j) = gamma[c] * (x(n, c, i, j) - mu) / std::sqrt(var + eps) + beta[c];
    }
  return y;
}

LayerConfig config_for(const Omega& omega, std::size_t groups = 2) {
  LayerConfig cfg;
  cfg.omega = omega;
  cfg.gn_groups = groups;
  return cfg;
}

Vector one_hot(std::size_t k, std::size_t i) {
  Vector v(k, 0.0);
  v[i] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("forward matches the scalar-loop formula") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const Tensor4 x = testutil::random_tensor(rng, {2, 2, 2, 2}, 2.0);
    SsnParams params = SsnParams::init(2, 3);
    params.gamma = testutil::random_vector(rng, 2, 0.5, 1.5);
    params.beta = testutil::random_vector(rng, 2);
    const Vector p{0.5, 0.3, 0.2}, pp{0.2, 0.3, 0.5};
    const SsnForward out = ssn_forward_with_ratios(x, params, p, pp, config_for(kThree));
    const Tensor4 ref = scalar_ssn(x, kThree, p, pp, params.gamma, params.beta, params.eps, 2);
    CHECK(max_abs_diff(out.y.data(), ref.data()) <= 1e-12);
  }
  const Tensor4 x = testutil::random_tensor(rng, {2, 4, 3, 3});
  const SsnParams params = SsnParams::init(4, 4);
  const Vector p{0.1, 0.2, 0.3, 0.4}, pp{0.4, 0.1, 0.3, 0.2};
  const SsnForward out = ssn_forward_with_ratios(x, params, p, pp, config_for(kFour));
  const Tensor4 ref = scalar_ssn(x, kFour, p, pp, params.gamma, params.beta, params.eps, 2);
  CHECK(max_abs_diff(out.y.data(), ref.data()) <= 1e-12);
}

TEST_CASE("forward through the gates uses sparsestmax ratios") {
  std::mt19937_64 rng(2);
  const Tensor4 x = testutil::random_tensor(rng, {2, 2, 2, 2});
  SsnParams params = SsnParams::init(2, 3);
  params.gate.z_mean = {0.5, 0.3, 0.2};
  params.gate.z_var = {0.2, 0.2, 0.6};
  const SsnForward out = ssn_forward(x, params, 0.3, config_for(kThree));
  CHECK(out.cache.p == sparsestmax(params.gate.z_mean, 0.3).p);
  CHECK(out.cache.pp == sparsestmax(params.gate.z_var, 0.3).p);
  const Tensor4 ref = scalar_ssn(x, kThree, out.cache.p, out.cache.pp, params.gamma, params.beta,
                                 params.eps, 2);
  CHECK(max_abs_diff(out.y.data(), ref.data()) <= 1e-12);
}

TEST_CASE("one-hot mixtures reproduce single normalizers") {
  std::mt19937_64 rng(3);
  const Tensor4 x = testutil::random_tensor(rng, {3, 4, 3, 3}, 2.0);
  const SsnParams params = SsnParams::init(4, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const Vector e = one_hot(4, k);
    const SsnForward out = ssn_forward_with_ratios(x, params, e, e, config_for(kFour));
    Tensor4 ref(x.shape());
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t c = 0; c < 4; ++c) {
        const auto [m, v] = scalar_moments(x, kFour[k], n, c, 2);
        for (std::size_t i = 0; i < 3; ++i)
          for (std::size_t j = 0; j < 3; ++j)
            ref(n, c, i, j) = (x(n, c, i, j) - m) / std::sqrt(v + params.eps);
      }
    CHECK(max_abs_diff(out.y.data(), ref.data()) <= 1e-12);
  }
}

TEST_CASE("one-hot instance normalization gives zero mean and near-unit variance") {
  std::mt19937_64 rng(4);
  const Tensor4 x = testutil::random_tensor(rng, {2, 3, 4, 4}, 0.7);
  const SsnParams params = SsnParams::init(3, 3);
  const Vector e = one_hot(3, 0);
  const SsnForward out = ssn_forward_with_ratios(x, params, e, e, config_for(kThree));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 3; ++c) {
      const auto [ym, yv] = moments_where(out.y, [&](std::size_t a, std::size_t b) { return a == n && b == c; });
      const auto [xm, xv] = moments_where(x, [&](std::size_t a, std::size_t b) { return a == n && b == c; });
      CHECK(std::abs(ym) < 1e-6);
      CHECK(std::abs(yv - 1.0 / (1.0 + params.eps / xv)) < 1e-6);
    }
}

TEST_CASE("argument validation") {
  const Tensor4 x(Shape4{1, 2, 2, 2}, 1.0);
  SsnParams params = SsnParams::init(2, 3);
  CHECK_THROWS_AS(ssn_forward(x, params, 0.1, config_for({Normalizer::IN})), InvalidInput);
  params.gamma.push_back(1.0);
  CHECK_THROWS_AS(ssn_forward(x, params, 0.1, config_for(kThree)), InvalidInput);
  params = SsnParams::init(2, 2);
  CHECK_THROWS_AS(ssn_forward(x, params, 0.1, config_for(kThree)), InvalidInput);
  params = SsnParams::init(2, 3);
  std::vector<double> bad(8, 0.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(ssn_forward(Tensor4(Shape4{1, 2, 2, 2}, bad), params, 0.1, config_for(kThree)),
                  InvalidInput);
  CHECK_THROWS_AS(Tensor4(Shape4{0, 2, 2, 2}), InvalidInput);
  LayerConfig cfg = config_for(kThree);
  cfg.eps = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("backward matches central differences") {
  std::mt19937_64 rng(5);
  const Shape4 shape{2, 2, 3, 3};
  const Tensor4 x = testutil::random_tensor(rng, shape, 1.5);
  const Tensor4 w = testutil::random_tensor(rng, shape);
  const LayerConfig cfg = config_for(kThree);
  SsnParams params = SsnParams::init(2, 3);
  params.gamma = {1.3, 0.7};
  params.beta = {0.1, -0.2};
  params.gate.z_mean = {0.45, 0.35, 0.2};  // Circle stage at r = 0.2
  params.gate.z_var = {0.4, 0.25, 0.35};
  const double r = 0.2;
  REQUIRE(sparsestmax(params.gate.z_mean, r).stage == Stage::Circle);
  REQUIRE(sparsestmax(params.gate.z_var, r).stage == Stage::Circle);

  auto loss = [&](const Tensor4& xx, const SsnParams& pr) {
    return testutil::dot(ssn_forward(xx, pr, r, cfg).y.data(), w.data());
  };
  const SsnForward fwd = ssn_forward(x, params, r, cfg);
  const SsnGradients g = ssn_backward(fwd.cache, w);
  const double h = 1e-5;

  {
    std::vector<double> base(x.data().begin(), x.data().end());
    auto f = [&](const std::vector<double>& v) { return loss(Tensor4(shape, v), params); };
    CHECK(testutil::rel_err(g.dx.data(), testutil::numeric_gradient(f, base, h)) < 1e-4);
  }
  {
    auto f = [&](const std::vector<double>& v) { SsnParams q = params; q.gamma = v; return loss(x, q); };
    CHECK(testutil::rel_err(g.dgamma, testutil::numeric_gradient(f, params.gamma, h)) < 1e-4);
  }
  {
    auto f = [&](const std::vector<double>& v) { SsnParams q = params; q.beta = v; return loss(x, q); };
    CHECK(testutil::rel_err(g.dbeta, testutil::numeric_gradient(f, params.beta, h)) < 1e-4);
  }
  {
    auto f = [&](const std::vector<double>& v) { SsnParams q = params; q.gate.z_mean = v; return loss(x, q); };
    CHECK(testutil::rel_err(g.dz_mean, testutil::numeric_gradient(f, params.gate.z_mean, h)) < 1e-4);
  }
  {
    auto f = [&](const std::vector<double>& v) { SsnParams q = params; q.gate.z_var = v; return loss(x, q); };
    CHECK(testutil::rel_err(g.dz_var, testutil::numeric_gradient(f, params.gate.z_var, h)) < 1e-4);
  }
  {
    const Vector p = fwd.cache.p, pp = fwd.cache.pp;
    auto fp = [&](const std::vector<double>& v) {
      return testutil::dot(ssn_forward_with_ratios(x, params, v, pp, cfg).y.data(), w.data());
    };
    auto fpp = [&](const std::vector<double>& v) {
      return testutil::dot(ssn_forward_with_ratios(x, params, p, v, cfg).y.data(), w.data());
    };
    CHECK(testutil::rel_err(g.dp, testutil::numeric_gradient(fp, p, h)) < 1e-4);
    CHECK(testutil::rel_err(g.dpp, testutil::numeric_gradient(fpp, pp, h)) < 1e-4);
  }
}

TEST_CASE("backward with group normalization matches central differences") {
  std::mt19937_64 rng(6);
  const Shape4 shape{2, 4, 2, 2};
  const Tensor4 x = testutil::random_tensor(rng, shape);
  const Tensor4 w = testutil::random_tensor(rng, shape);
  const LayerConfig cfg = config_for(kFour);
  const SsnParams params = SsnParams::init(4, 4);
  const Vector p{0.1, 0.2, 0.3, 0.4}, pp{0.25, 0.25, 0.2, 0.3};
  const SsnGradients g = ssn_backward(ssn_forward_with_ratios(x, params, p, pp, cfg).cache, w);
  CHECK(g.dz_mean.empty());
  std::vector<double> base(x.data().begin(), x.data().end());
  auto f = [&](const std::vector<double>& v) {
    return testutil::dot(ssn_forward_with_ratios(Tensor4(shape, v), params, p, pp, cfg).y.data(), w.data());
  };
  CHECK(testutil::rel_err(g.dx.data(), testutil::numeric_gradient(f, base, 1e-5)) < 1e-4);
}

TEST_CASE("zero upstream gives zero gradients") {
  std::mt19937_64 rng(7);
  const Tensor4 x = testutil::random_tensor(rng, {2, 2, 3, 3});
  SsnParams params = SsnParams::init(2, 3);
  params.gate.z_mean = {0.45, 0.35, 0.2};
  const SsnGradients g = ssn_backward(ssn_forward(x, params, 0.2, config_for(kThree)).cache,
                                      Tensor4(x.shape()));
  CHECK(testutil::max_abs(g.dx.data()) == 0.0);
  CHECK(testutil::max_abs(g.dgamma) == 0.0);
  CHECK(testutil::max_abs(g.dbeta) == 0.0);
  CHECK(testutil::max_abs(g.dz_mean) == 0.0);
  CHECK(testutil::max_abs(g.dz_var) == 0.0);
}

TEST_CASE("gate gradients vanish for dropped and frozen ratios") {
  std::mt19937_64 rng(8);
  const Tensor4 x = testutil::random_tensor(rng, {2, 2, 3, 3});
  const Tensor4 w = testutil::random_tensor(rng, x.shape());
  SsnParams params = SsnParams::init(2, 3);
  params.gate.z_mean = {0.5, 0.3, 0.2};
  params.gate.z_var = {0.2, 0.3, 0.5};
  const SsnGradients g = ssn_backward(ssn_forward(x, params, 0.6, config_for(kThree)).cache, w);
  CHECK(g.dz_mean[2] == 0.0);
  CHECK(g.dz_var[0] == 0.0);

  SsnParams four = SsnParams::init(2, 4);
  four.gate.z_mean = {0.3, 0.25, 0.23, 0.22};
  const SsnForward f4 = ssn_forward(x, four, 0.6, config_for(kFour));
  REQUIRE(f4.cache.p[3] == 0.0);
  const SsnGradients g4 = ssn_backward(f4.cache, w);
  CHECK(g4.dz_mean[3] == 0.0);
  CHECK(testutil::max_abs(g4.dz_mean) > 0.0);

  params.gate.z_mean = {0.9, 0.05, 0.05};
  params.gate.frozen_mean = true;
  params.gate.frozen_var = true;
  const double rc = SimplexGeometry::of(3).r_circum;
  const SsnForward f = ssn_forward(x, params, rc, config_for(kThree));
  CHECK(is_one_hot(f.cache.p));
  const SsnGradients gf = ssn_backward(f.cache, w);
  CHECK(gf.dz_mean == Vector{0.0, 0.0, 0.0});
  CHECK(gf.dz_var == Vector{0.0, 0.0, 0.0});

  params.gate.frozen_mean = false;
  params.gate.z_mean = {0.3, 0.4, 0.3};
  params.gate.frozen_mean = true;  // frozen regardless of the current ratio
  CHECK(ssn_backward(ssn_forward(x, params, 0.3, config_for(kThree)).cache, w).dz_mean ==
        Vector{0.0, 0.0, 0.0});
}

TEST_CASE("eval mode") {
  std::mt19937_64 rng(9);
  const Tensor4 x = testutil::random_tensor(rng, {2, 3, 2, 2});
  SsnParams params = SsnParams::init(3, 3);
  params.mode = Mode::Eval;
  params.bn_running_mean = {0.5, -0.5, 0.0};
  params.bn_running_var = {2.0, 0.5, 1.0};
  const LayerConfig cfg = config_for(kThree);
  const SsnForward a = ssn_forward(x, params, 0.1, cfg);
  const SsnForward b = ssn_forward(x, params, 0.1, cfg);
  CHECK(std::equal(a.y.data().begin(), a.y.data().end(), b.y.data().begin()));
  CHECK_THROWS_AS(ssn_backward(a.cache, x), InvalidState);
  CHECK(a.cache.x.size() == 0);

  const Vector bn = one_hot(3, 1);
  const SsnForward e = ssn_forward_with_ratios(x, params, bn, bn, cfg);
  CHECK_FALSE(e.cache.stats[0].has_value());
  CHECK_FALSE(e.cache.stats[2].has_value());
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
          const double ref = (x(n, c, i, j) - params.bn_running_mean[c]) /
                             std::sqrt(params.bn_running_var[c] + params.eps);
          CHECK(std::abs(e.y(n, c, i, j) - ref) < 1e-12);
        }

  const Vector in = one_hot(3, 0);
  const SsnForward ie = ssn_forward_with_ratios(x, params, in, in, cfg);
  params.mode = Mode::Train;
  const SsnForward it = ssn_forward_with_ratios(x, params, in, in, cfg);
  CHECK(max_abs_diff(ie.y.data(), it.y.data()) == 0.0);
}

TEST_CASE("running statistics") {
  SsnParams params = SsnParams::init(1, 3);
  Moments batch;
  batch.kind = Normalizer::BN;
  batch.channels = 1;
  batch.mean = {2.0};
  batch.var = {4.0};
  const SsnParams all = update_running_stats(params, batch, 1.0);
  CHECK(all.bn_running_mean == Vector{2.0});
  CHECK(all.bn_running_var == Vector{4.0});
  const SsnParams none = update_running_stats(params, batch, 0.0);
  CHECK(none.bn_running_mean == Vector{0.0});
  CHECK(none.bn_running_var == Vector{1.0});

  // (0, 1) -> (0.2, 1.3) -> (0.08, 1.22)
  params = update_running_stats(params, batch, 0.1);
  CHECK(std::abs(params.bn_running_mean[0] - 0.2) < 1e-12);
  CHECK(std::abs(params.bn_running_var[0] - 1.3) < 1e-12);
  batch.mean = {-1.0};
  batch.var = {0.5};
  params = update_running_stats(params, batch, 0.1);
  CHECK(std::abs(params.bn_running_mean[0] - 0.08) < 1e-12);
  CHECK(std::abs(params.bn_running_var[0] - 1.22) < 1e-12);

  batch.kind = Normalizer::IN;
  CHECK_THROWS_AS(update_running_stats(params, batch, 0.1), InvalidInput);
}

TEST_CASE("normalizer selection") {
  const Selection s = select_normalizer(Vector{1, 0, 0}, Vector{0, 0, 1}, kThree);
  CHECK(s.mean == Normalizer::IN);
  CHECK(s.var == Normalizer::LN);
  CHECK_THROWS_AS(select_normalizer(Vector{0.5, 0.5, 0}, Vector{0, 0, 1}, kThree), NotConverged);
  CHECK_THROWS_AS(select_normalizer(Vector{1, 0, 0}, Vector{0, 0.9, 0.1}, kThree), NotConverged);

  SsnParams params = SsnParams::init(2, 3);
  params.gate.z_mean = {0.1, 0.7, 0.2};
  params.gate.z_var = {0.6, 0.1, 0.3};
  const Selection t = select_normalizer(params, config_for(kThree), SimplexGeometry::of(3).r_circum);
  CHECK(t.mean == Normalizer::BN);
  CHECK(t.var == Normalizer::IN);
  CHECK_THROWS_AS(select_normalizer(params, config_for(kThree), 0.1), NotConverged);
}
