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

#include "sparsestmax/trajectory.hpp"

#include <random>

#include "sparsestmax/error.hpp"
#include "sparsestmax/format.hpp"

namespace ssn {

std::vector<TrajectoryPoint> simulate_trajectory(std::span<const double> z0,
                                                 std::size_t steps, std::uint64_t seed,
                                                 double lr, double noise) {
  if (steps == 0) throw InvalidInput("trajectory: steps must be positive");
  if (!(lr > 0.0) || !(noise >= 0.0)) throw InvalidInput("trajectory: bad lr or noise");
  const SimplexGeometry geometry = SimplexGeometry::of(z0.size());
  const RadiusSchedule schedule = RadiusSchedule::linear(steps, geometry);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Vector z(z0.begin(), z0.end());
  std::vector<TrajectoryPoint> out;
  out.reserve(steps + 1);
  for (std::size_t t = 0; t <= steps; ++t) {
    const double r = schedule_radius(schedule, t);
    const ProjectionResult res = sparsestmax(z, r, geometry);
    out.push_back({t, r, res.p});
    if (t == steps) break;
    Vector g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      g[i] = res.p[i] - (i == 0 ? 1.0 : 0.0) + noise * normal(rng);
    }
    const Vector dz = sparsestmax_vjp(res, g);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= lr * dz[i];
  }
  return out;
}

void write_trajectory_points_csv(std::ostream& out,
                                 const std::vector<TrajectoryPoint>& points) {
  const std::size_t k = points.empty() ? 0 : points.front().p.size();
  out << "step,r";
  for (std::size_t i = 1; i <= k; ++i) out << ",p" << i;
  out << '\n';
  for (const TrajectoryPoint& pt : points) {
    out << pt.step << ',' << format_number(pt.r);
    for (double v : pt.p) out << ',' << format_number(v);
    out << '\n';
  }
}

}  // namespace ssn
