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

// Brute-force reference for the constrained simplex projection. Used by the
// test suites and by the `verify` command; never on the production path.

#ifndef SPARSESTMAX_ORACLE_HPP_
#define SPARSESTMAX_ORACLE_HPP_

#include <cstddef>
#include <span>

#include "sparsestmax/simplex.hpp"

namespace ssn::oracle {

// Minimizer of |p - z|^2 over the barycentric grid {i/grid_n} of the simplex,
// restricted to |p - u| >= r (r clamped to the circumradius). K <= 4 only.
Vector project(std::span<const double> z, double r, std::size_t grid_n);

// |a - b|^2.
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace ssn::oracle

#endif  // SPARSESTMAX_ORACLE_HPP_
