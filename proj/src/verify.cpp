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

#include "sparsestmax/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sparsestmax/error.hpp"
#include "sparsestmax/format.hpp"
#include "sparsestmax/oracle.hpp"

namespace ssn::verify {
namespace {

std::vector<long> signature(const ProjectionResult& res) {
  std::vector<long> sig{static_cast<long>(res.stage)};
  for (const ProjectionLevel& level : res.levels) {
    sig.push_back(static_cast<long>(level.exit));
    sig.push_back(level.degenerate ? 1 : 0);
    sig.push_back(-1);
    for (std::size_t i : level.p0_support) sig.push_back(static_cast<long>(i));
    sig.push_back(-2);
    for (std::size_t i : level.p2_support) sig.push_back(static_cast<long>(i));
  }
  return sig;
}

bool stable(const Vector& z, double r, double margin) {
  const auto sig = signature(sparsestmax(z, r));
  if (signature(sparsestmax(z, r + margin)) != sig) return false;
  if (signature(sparsestmax(z, std::max(r - margin, 0.0))) != sig) return false;
  for (std::size_t j = 0; j < z.size(); ++j) {
    for (double delta : {-1e-4, 1e-4}) {
      Vector zz = z;
      zz[j] += delta;
      if (signature(sparsestmax(zz, r)) != sig) return false;
    }
  }
  return true;
}

Vector random_upstream(std::mt19937_64& rng, std::size_t k) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector g(k);
  for (double& v : g) v = normal(rng);
  return g;
}

CheckResult check(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok, std::move(detail)};
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

Sample sample_off_boundary(std::mt19937_64& rng, std::size_t k, double margin,
                           std::size_t index) {
  const SimplexGeometry geometry = SimplexGeometry::of(k);
  const Stage target = std::array{Stage::Sparsemax, Stage::Circle, Stage::Face}[index % 3];
  std::normal_distribution<double> noise(0.0, 0.15);
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  std::uniform_real_distribution<double> radius(0.0, geometry.r_circum - margin);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Sample s;
    s.z.resize(k);
    const double c = shift(rng);
    for (double& v : s.z) v = 1.0 / static_cast<double>(k) + noise(rng) + c;
    s.r = radius(rng);
    const ProjectionResult res = sparsestmax(s.z, s.r, geometry);
    if (res.stage != target) continue;
    if (res.levels.front().distance < 1e-3) continue;
    if (stable(s.z, s.r, margin)) return s;
  }
  throw InvalidState("could not sample an off-boundary point for stage " +
                     std::string(stage_name(target)));
}

Vector finite_difference_vjp(std::span<const double> z, double r,
                             std::span<const double> upstream, double step) {
  Vector grad(z.size(), 0.0);
  Vector zz(z.begin(), z.end());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double orig = zz[j];
    zz[j] = orig + step;
    const Vector plus = sparsestmax(zz, r).p;
    zz[j] = orig - step;
    const Vector minus = sparsestmax(zz, r).p;
    zz[j] = orig;
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) acc += upstream[i] * (plus[i] - minus[i]);
    grad[j] = acc / (2.0 * step);
  }
  return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  double scale = 1.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  return max_abs_diff(a, b) / scale;
}

GradcheckReport gradcheck(std::uint64_t seed, std::size_t trials, std::size_t k,
                          double tolerance) {
  if (trials == 0) throw InvalidInput("gradcheck: trials must be positive");
  if (k < 2) throw InvalidInput("gradcheck: k must be >= 2");
  GradcheckReport report;
  report.seed = seed;
  report.trials = trials;
  report.k = k;
  report.tolerance = tolerance;
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const Sample s = sample_off_boundary(rng, k, 1e-3, t);
    const Vector g = random_upstream(rng, k);
    const Vector analytic = sparsestmax_vjp(sparsestmax(s.z, s.r), g);
    const Vector numeric = finite_difference_vjp(s.z, s.r, g);
    const double err = relative_error(analytic, numeric);
    report.max_relative_error = std::max(report.max_relative_error, err);
    if (!(err < tolerance)) ++report.failures;
  }
  return report;
}

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed, bool inject_fault) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);

  {
    const Vector p = sparsemax(Vector{0.8, 0.6, 0.1});
    const double err = max_abs_diff(p, Vector{0.6, 0.4, 0.0});
    out.push_back(check("sparsemax_reference_value", err <= 1e-12,
                        "max error " + format_number(err)));
  }

  {
    struct Row { Vector z; double r; Vector expected; };
    const std::vector<Row> rows{
        {{0.5, 0.3, 0.2}, 0.15, {0.5, 0.3, 0.2}},
        {{0.5, 0.3, 0.2}, 0.3, {0.56, 0.29, 0.15}},
        {{0.5, 0.3, 0.2}, 0.6, {0.81, 0.19, 0.0}},
        {{0.5, 0.3, 0.2}, 0.816, {1.0, 0.0, 0.0}},
        {{0.3, 0.25, 0.23, 0.22}, 0.3, {0.4933, 0.25, 0.1527, 0.1040}},
        {{0.3, 0.25, 0.23, 0.22}, 0.6, {0.75, 0.23, 0.02, 0.0}},
        {{0.3, 0.25, 0.23, 0.22}, 0.866, {1.0, 0.0, 0.0, 0.0}},
    };
    double worst = 0.0;
    for (const Row& row : rows) {
      worst = std::max(worst, max_abs_diff(sparsestmax(row.z, row.r).p, row.expected));
    }
    out.push_back(check("stage_table", worst <= 0.005, "max error " + format_number(worst)));
  }

  {
    const SimplexGeometry g = SimplexGeometry::of(3);
    const RadiusSchedule s = RadiusSchedule::linear(100, g);
    std::size_t first = 0;
    while (first <= 100 && schedule_radius(s, first) <= g.r_inscribed) ++first;
    out.push_back(check("schedule_crosses_inscribed_radius", first == 41,
                        "first step above r_i: " + std::to_string(first)));
  }

  {
    std::size_t bad_simplex = 0, bad_radius = 0, bad_consistency = 0, bad_vertex = 0,
                bad_perm = 0;
    std::uniform_real_distribution<double> uz(-1.0, 1.0), ur(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
      const std::size_t k = 2 + static_cast<std::size_t>(t % 5);
      const SimplexGeometry g = SimplexGeometry::of(k);
      Vector z(k);
      for (double& v : z) v = uz(rng);
      const double r = ur(rng) * g.r_circum;
      const ProjectionResult res = sparsestmax(z, r, g);

      const double sum = std::accumulate(res.p.begin(), res.p.end(), 0.0);
      if (std::abs(sum - 1.0) > 1e-12 ||
          std::any_of(res.p.begin(), res.p.end(), [](double v) { return v < 0.0; })) {
        ++bad_simplex;
      }
      double dist2 = 0.0;
      for (std::size_t i = 0; i < k; ++i) dist2 += (res.p[i] - g.center[i]) * (res.p[i] - g.center[i]);
      const double dist = std::sqrt(dist2);
      if (dist < r - 1e-9) ++bad_radius;
      if (res.stage != Stage::Sparsemax && res.stage != Stage::Vertex &&
          std::abs(dist - r) > 1e-9) {
        ++bad_radius;
      }

      const Vector p0 = sparsemax(z);
      double d0 = 0.0;
      for (std::size_t i = 0; i < k; ++i) d0 += (p0[i] - g.center[i]) * (p0[i] - g.center[i]);
      if (std::sqrt(d0) >= r && res.p != p0) ++bad_consistency;

      const ProjectionResult top = sparsestmax(z, g.r_circum, g);
      if (!is_one_hot(top.p) || argmax_index(top.p) != argmax_index(p0)) ++bad_vertex;

      std::vector<std::size_t> perm(k);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      Vector zp(k);
      for (std::size_t i = 0; i < k; ++i) zp[i] = z[perm[i]];
      const Vector pp = sparsestmax(zp, r, g).p;
      for (std::size_t i = 0; i < k; ++i) {
        if (std::abs(pp[i] - res.p[perm[i]]) > 1e-12) {
          ++bad_perm;
          break;
        }
      }
    }
    out.push_back(check("outputs_on_simplex", bad_simplex == 0,
                        std::to_string(bad_simplex) + " violations / 500"));
    out.push_back(check("radius_constraint", bad_radius == 0,
                        std::to_string(bad_radius) + " violations / 500"));
    out.push_back(check("sparsemax_consistency", bad_consistency == 0,
                        std::to_string(bad_consistency) + " violations / 500"));
    out.push_back(check("vertex_limit", bad_vertex == 0,
                        std::to_string(bad_vertex) + " violations / 500"));
    out.push_back(check("permutation_equivariance", bad_perm == 0,
                        std::to_string(bad_perm) + " violations / 500"));
  }

  {
    std::size_t bad = 0;
    std::uniform_real_distribution<double> uz(-1.0, 1.0), ur(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
      const std::size_t k = 2 + static_cast<std::size_t>(t % 4);
      Vector z(k);
      for (double& v : z) v = uz(rng);
      const double r = ur(rng) * SimplexGeometry::of(k).r_circum;
      const ProjectionResult res = sparsestmax(z, r);
      const Support s0 = res.levels.front().p0_support;
      for (std::size_t i = 0; i < k; ++i) {
        Vector e(k, 0.0);
        e[i] = 1.0;
        const Vector row = sparsestmax_vjp(res, e);
        for (std::size_t j = 0; j < k; ++j) {
          const bool p0_zero = std::find(s0.begin(), s0.end(), j) == s0.end();
          const bool out_zero = res.p[j] == 0.0;
          if ((p0_zero || out_zero) && row[j] != 0.0) ++bad;
          if (res.p[i] == 0.0 && row[j] != 0.0) ++bad;
        }
      }
    }
    out.push_back(check("zero_gradient_sparsity", bad == 0,
                        std::to_string(bad) + " nonzero entries"));
  }

  {
    double worst = 0.0;
    for (std::size_t t = 0; t < 100; ++t) {
      const std::size_t k = 3 + t % 2;
      Sample s;
      do {
        s = sample_off_boundary(rng, k, 1e-3, 1);
      } while (false);
      const ProjectionResult res = sparsestmax(s.z, s.r);
      const Vector g = random_upstream(rng, k);
      const Vector v = sparsestmax_vjp(res, g);
      const ProjectionLevel& level = res.levels.front();
      double dot = 0.0;
      for (std::size_t i = 0; i < k; ++i) dot += v[i] * level.direction[i];
      worst = std::max(worst, std::abs(dot));
    }
    out.push_back(check("radial_null_direction", worst < 1e-8,
                        "max |g . (p0 - u)| " + format_number(worst)));
  }

  {
    std::size_t bad = 0;
    double worst = -1.0;
    std::uniform_real_distribution<double> uz(-0.5, 1.0), ur(0.0, 1.0);
    for (int t = 0; t < 150; ++t) {
      const std::size_t k = 2 + static_cast<std::size_t>(t % 3);
      Vector z(k);
      for (double& v : z) v = uz(rng);
      const double r = ur(rng) * SimplexGeometry::of(k).r_circum;
      const double ours = oracle::squared_distance(sparsestmax(z, r).p, z);
      const double grid = oracle::squared_distance(oracle::project(z, r, 200), z);
      worst = std::max(worst, ours - grid);
      if (ours > grid + 1e-4) ++bad;
    }
    out.push_back(check("oracle_equivalence", bad == 0,
                        std::to_string(bad) + " worse than grid; max excess " +
                            format_number(worst)));
  }

  for (std::size_t k : {3, 4}) {
    const GradcheckReport rep = gradcheck(rng(), 100, k, inject_fault ? 0.0 : 1e-5);
    out.push_back(check("gradcheck_k" + std::to_string(k), rep.passed(),
                        "max relative error " + format_number(rep.max_relative_error)));
  }
  return out;
}

}  // namespace ssn::verify
