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

// Self-checks behind the `gradcheck` and `verify` commands.

#ifndef SPARSESTMAX_VERIFY_HPP_
#define SPARSESTMAX_VERIFY_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sparsestmax/simplex.hpp"

namespace ssn::verify {

struct Sample {
  Vector z;
  double r = 0.0;
};

// Draws (z, r) whose stage structure is unchanged under r +/- margin and
// under small coordinate perturbations of z, so the projection is smooth
// there. Cycles through the Sparsemax, Circle and Face stages.
Sample sample_off_boundary(std::mt19937_64& rng, std::size_t k, double margin,
                           std::size_t index);

// Central differences of z -> <upstream, sparsestmax(z, r).p>.
Vector finite_difference_vjp(std::span<const double> z, double r,
                             std::span<const double> upstream, double step = 1e-6);

// max|a - b| / max(max|b|, 1).
double relative_error(std::span<const double> a, std::span<const double> b);

struct GradcheckReport {
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::size_t k = 0;
  double tolerance = 1e-5;
  double max_relative_error = 0.0;
  std::size_t failures = 0;

  bool passed() const { return failures == 0; }
};

GradcheckReport gradcheck(std::uint64_t seed, std::size_t trials, std::size_t k,
                          double tolerance = 1e-5);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Runs the invariant suite. `inject_fault` corrupts one check on purpose so
// callers can confirm that failures are reported.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed, bool inject_fault = false);

}  // namespace ssn::verify

#endif  // SPARSESTMAX_VERIFY_HPP_
