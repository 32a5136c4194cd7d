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

#include "sparsestmax/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sparsestmax/error.hpp"

namespace ssn::oracle {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Vector project(std::span<const double> z, double r, std::size_t grid_n) {
  const std::size_t k = z.size();
  if (k < 2) throw InvalidInput("oracle: need K >= 2");
  if (k > 4) {
    throw Unsupported("oracle: K=" + std::to_string(k) +
                      " is too large for grid enumeration (K <= 4)");
  }
  if (grid_n < 100) throw InvalidInput("oracle: grid_n must be >= 100");
  if (r < 0.0) throw InvalidInput("oracle: radius must be >= 0");

  const SimplexGeometry geometry = SimplexGeometry::of(k);
  const double radius = std::min(r, geometry.r_circum);
  const double min_dist2 = radius * radius - 1e-12;
  const double u = 1.0 / static_cast<double>(k);
  const double step = 1.0 / static_cast<double>(grid_n);
  const long n = static_cast<long>(grid_n);

  double best = std::numeric_limits<double>::infinity();
  long best_idx[4] = {0, 0, 0, 0};

  // idx[0..k-2] enumerated, idx[k-1] = n - sum(rest).
  long idx[4] = {0, 0, 0, 0};
  auto evaluate = [&]() {
    double obj = 0.0;
    double dist2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double p = static_cast<double>(idx[i]) * step;
      obj += (p - z[i]) * (p - z[i]);
      dist2 += (p - u) * (p - u);
    }
    if (dist2 >= min_dist2 && obj < best) {
      best = obj;
      std::copy(idx, idx + 4, best_idx);
    }
  };

  switch (k) {
    case 2:
      for (idx[0] = 0; idx[0] <= n; ++idx[0]) {
        idx[1] = n - idx[0];
        evaluate();
      }
      break;
    case 3:
      for (idx[0] = 0; idx[0] <= n; ++idx[0]) {
        for (idx[1] = 0; idx[1] <= n - idx[0]; ++idx[1]) {
          idx[2] = n - idx[0] - idx[1];
          evaluate();
        }
      }
      break;
    default:
      for (idx[0] = 0; idx[0] <= n; ++idx[0]) {
        for (idx[1] = 0; idx[1] <= n - idx[0]; ++idx[1]) {
          for (idx[2] = 0; idx[2] <= n - idx[0] - idx[1]; ++idx[2]) {
            idx[3] = n - idx[0] - idx[1] - idx[2];
            evaluate();
          }
        }
      }
      break;
  }

  Vector p(k);
  for (std::size_t i = 0; i < k; ++i) p[i] = static_cast<double>(best_idx[i]) * step;
  return p;
}

}  // namespace ssn::oracle
