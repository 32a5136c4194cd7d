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

#include "sparsestmax/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "sparsestmax/error.hpp"
#include "sparsestmax/ssn_layer.hpp"

namespace ssn {
namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double coefficient_of_variation(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2 || mean <= 0.0) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / mean;
}

double time_forward_ms(const Tensor4& x, const SsnParams& params, const LayerConfig& config,
                       double& sink) {
  const auto start = std::chrono::steady_clock::now();
  const SsnForward out = ssn_forward(x, params, 0.0, config);
  const auto stop = std::chrono::steady_clock::now();
  sink += out.y.data()[0];
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

}  // namespace

BenchReport run_bench(Shape4 dims, std::size_t reps, std::uint64_t seed) {
  if (dims.n == 0 || dims.c == 0 || dims.h == 0 || dims.w == 0) {
    throw InvalidInput("bench: dims must be positive");
  }
  if (reps == 0) throw InvalidInput("bench: reps must be positive");

  std::vector<double> data(dims.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : data) v = normal(rng);
  const Tensor4 x(dims, std::move(data));

  LayerConfig config;
  const std::size_t k = config.omega.size();
  SsnParams combined = SsnParams::init(dims.c, k);
  combined.mode = Mode::Eval;
  SsnParams sparse = combined;
  sparse.gate.z_mean.assign(k, 0.0);
  sparse.gate.z_mean[0] = 1.0;
  sparse.gate.z_var = sparse.gate.z_mean;

  std::vector<double> tc, ts;
  double sink = 0.0;
  time_forward_ms(x, combined, config, sink);
  time_forward_ms(x, sparse, config, sink);
  for (std::size_t i = 0; i < reps; ++i) {
    tc.push_back(time_forward_ms(x, combined, config, sink));
    ts.push_back(time_forward_ms(x, sparse, config, sink));
  }
  if (!std::isfinite(sink)) throw InvalidState("bench: non-finite output");

  BenchReport report;
  report.dims = dims;
  report.reps = reps;
  report.combined_ms = median(tc);
  report.sparse_ms = median(ts);
  report.ratio = report.sparse_ms > 0.0 ? report.combined_ms / report.sparse_ms : 0.0;
  report.combined_cv = coefficient_of_variation(tc);
  report.sparse_cv = coefficient_of_variation(ts);
  report.preempted = report.combined_cv > 0.2 || report.sparse_cv > 0.2;
  return report;
}

}  // namespace ssn
