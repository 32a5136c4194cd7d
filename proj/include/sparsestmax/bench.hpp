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

// Eval-mode throughput of the SSN layer with all statistics mixed versus a
// single selected normalizer.

#ifndef SPARSESTMAX_BENCH_HPP_
#define SPARSESTMAX_BENCH_HPP_

#include <cstddef>
#include <cstdint>

#include "sparsestmax/tensor.hpp"

namespace ssn {

struct BenchReport {
  Shape4 dims;
  std::size_t reps = 0;
  double combined_ms = 0.0;  // medians
  double sparse_ms = 0.0;
  double ratio = 0.0;        // combined / sparse
  double combined_cv = 0.0;  // stddev / mean across reps
  double sparse_cv = 0.0;
  bool preempted = false;    // either cv above 0.2
};

BenchReport run_bench(Shape4 dims, std::size_t reps, std::uint64_t seed = 0);

}  // namespace ssn

#endif  // SPARSESTMAX_BENCH_HPP_
