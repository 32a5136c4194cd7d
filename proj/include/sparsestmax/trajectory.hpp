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

// Gradient descent on SparsestMax control parameters against a noisy
// synthetic loss while the radius follows the linear schedule.

#ifndef SPARSESTMAX_TRAJECTORY_HPP_
#define SPARSESTMAX_TRAJECTORY_HPP_

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "sparsestmax/simplex.hpp"

namespace ssn {

struct TrajectoryPoint {
  std::size_t step = 0;
  double r = 0.0;
  Vector p;
};

// Loss at step t is 0.5 * |p - e_0|^2 + <xi_t, p> with xi_t ~ N(0, noise^2)
// drawn from `seed`. Returns steps + 1 points; point t is taken before the
// t-th update.
std::vector<TrajectoryPoint> simulate_trajectory(std::span<const double> z0,
                                                 std::size_t steps, std::uint64_t seed,
                                                 double lr = 0.5, double noise = 0.1);

// Header: step,r,p1,...,pK.
void write_trajectory_points_csv(std::ostream& out,
                                 const std::vector<TrajectoryPoint>& points);

}  // namespace ssn

#endif  // SPARSESTMAX_TRAJECTORY_HPP_
