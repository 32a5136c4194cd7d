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

#include "sparsestmax/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "sparsestmax/error.hpp"

namespace ssn {
namespace {

// Below this distance from the center the radial direction is undefined.
constexpr double kDegenerateDistance = 1e-12;
// Radii this close to the circumradius of the active face snap to a vertex.
constexpr double kVertexTolerance = 1e-12;

void check_logits(std::span<const double> z, const char* what) {
  if (z.size() < 2) {
    throw InvalidInput(std::string(what) + ": need at least 2 entries, got " +
                       std::to_string(z.size()));
  }
  for (double v : z) {
    if (!std::isfinite(v)) {
      throw InvalidInput(std::string(what) + ": input contains a non-finite value");
    }
  }
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Support full_face(std::size_t k) {
  Support face(k);
  std::iota(face.begin(), face.end(), std::size_t{0});
  return face;
}

Vector barycenter(const Support& face, std::size_t k) {
  Vector c(k, 0.0);
  const double w = 1.0 / static_cast<double>(face.size());
  for (std::size_t i : face) c[i] = w;
  return c;
}

// Threshold of the sorted-prefix rule restricted to the coordinates in `face`.
double threshold_on(std::span<const double> z, const Support& face) {
  std::vector<double> sorted;
  sorted.reserve(face.size());
  for (std::size_t i : face) sorted.push_back(z[i]);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  double cumsum = 0.0;
  double support_sum = 0.0;
  std::size_t support_size = 0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumsum += sorted[k];
    if (1.0 + static_cast<double>(k + 1) * sorted[k] > cumsum) {
      support_size = k + 1;
      support_sum = cumsum;
    }
  }
  return (support_sum - 1.0) / static_cast<double>(support_size);
}

Vector sparsemax_on(std::span<const double> z, const Support& face) {
  const double tau = threshold_on(z, face);
  Vector p(z.size(), 0.0);
  std::size_t positive = 0;
  std::size_t last = 0;
  for (std::size_t i : face) {
    p[i] = std::max(z[i] - tau, 0.0);
    if (p[i] > 0.0) {
      ++positive;
      last = i;
    }
  }
  // A single survivor is a vertex; keep it exactly one-hot.
  if (positive == 1) p[last] = 1.0;
  return p;
}

std::size_t argmax_on(std::span<const double> v, const Support& face) {
  std::size_t best = face.front();
  for (std::size_t i : face) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// Transposed sparsemax Jacobian applied to g; the Jacobian is symmetric.
Vector sparsemax_vjp_on(const Support& support, std::span<const double> g) {
  Vector out(g.size(), 0.0);
  if (support.empty()) return out;
  double mean = 0.0;
  for (std::size_t i : support) mean += g[i];
  mean /= static_cast<double>(support.size());
  for (std::size_t i : support) out[i] = g[i] - mean;
  return out;
}

// Jacobian of x -> c + r x/|x| at x = d is r (|d|^2 I - d d^T)/|d|^3.
// On a one-dimensional face the sphere meets the face in isolated points,
// so the map is locally constant there.
Vector radial_vjp(const ProjectionLevel& level, std::span<const double> g) {
  Vector out(g.size(), 0.0);
  if (level.degenerate || level.face.size() <= 2) return out;
  const double dist = level.distance;
  const double scale = level.radius / dist;
  const double proj = dot(level.direction, g) / (dist * dist);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out[i] = scale * (g[i] - level.direction[i] * proj);
  }
  return out;
}

}  // namespace

SimplexGeometry SimplexGeometry::of(std::size_t k) {
  if (k < 2) {
    throw InvalidInput("simplex dimension must be at least 2, got " +
                       std::to_string(k));
  }
  const double kd = static_cast<double>(k);
  SimplexGeometry g;
  g.k = k;
  g.center.assign(k, 1.0 / kd);
  g.r_circum = std::sqrt((kd - 1.0) / kd);
  g.r_inscribed = std::sqrt(1.0 / (kd * (kd - 1.0)));
  return g;
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Sparsemax: return "Sparsemax";
    case Stage::Circle: return "Circle";
    case Stage::Face: return "Face";
    case Stage::Vertex: return "Vertex";
  }
  return "Unknown";
}

Vector softmax(std::span<const double> z) {
  check_logits(z, "softmax");
  const double m = *std::max_element(z.begin(), z.end());
  Vector p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - m);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double sparsemax_threshold(std::span<const double> z) {
  check_logits(z, "sparsemax");
  return threshold_on(z, full_face(z.size()));
}

Vector sparsemax(std::span<const double> z) {
  check_logits(z, "sparsemax");
  return sparsemax_on(z, full_face(z.size()));
}

Matrix sparsemax_jacobian(std::span<const double> z) {
  const Vector p = sparsemax(z);
  const Support s = support_of(p);
  Matrix j(z.size(), z.size());
  const double inv = 1.0 / static_cast<double>(s.size());
  for (std::size_t a : s) {
    for (std::size_t b : s) j(a, b) = (a == b ? 1.0 : 0.0) - inv;
  }
  return j;
}

ProjectionResult sparsestmax(std::span<const double> z, double r,
                             const SimplexGeometry& geometry) {
  check_logits(z, "sparsestmax");
  if (!std::isfinite(r) || r < 0.0) {
    throw InvalidInput("sparsestmax: radius must be finite and >= 0, got " +
                       std::to_string(r));
  }
  if (geometry.k != z.size()) {
    throw InvalidInput("sparsestmax: geometry has K=" + std::to_string(geometry.k) +
                       " but z has " + std::to_string(z.size()) + " entries");
  }
  const std::size_t k = z.size();

  ProjectionResult result;
  Support face = full_face(k);
  Vector input(z.begin(), z.end());
  Vector center = geometry.center;
  double radius = std::min(r, geometry.r_circum);

  // Each pass either terminates or strictly shrinks the face, so at most K
  // levels are produced.
  while (true) {
    ProjectionLevel level;
    level.face = face;
    level.input = input;
    level.radius = radius;
    level.center = center;
    level.p0 = sparsemax_on(input, face);
    level.p0_support = support_of(level.p0);
    level.direction.resize(k);
    for (std::size_t i = 0; i < k; ++i) level.direction[i] = level.p0[i] - center[i];
    level.distance = norm2(level.direction);

    if (level.distance >= radius) {
      level.exit = ProjectionLevel::Exit::Feasible;
      result.p = level.p0;
      result.levels.push_back(std::move(level));
      break;
    }

    const double s = static_cast<double>(face.size());
    const double face_circum = std::sqrt((s - 1.0) / s);
    if (radius >= face_circum - kVertexTolerance) {
      level.exit = ProjectionLevel::Exit::Vertex;
      result.p.assign(k, 0.0);
      result.p[argmax_on(level.p0, face)] = 1.0;
      result.levels.push_back(std::move(level));
      break;
    }

    if (level.distance < kDegenerateDistance) {
      level.degenerate = true;
      const std::size_t m = argmax_on(input, face);
      std::fill(level.direction.begin(), level.direction.end(), 0.0);
      for (std::size_t i : face) level.direction[i] = (i == m ? 1.0 : 0.0) - center[i];
      level.distance = norm2(level.direction);
    }

    level.p1.assign(k, 0.0);
    bool nonnegative = true;
    for (std::size_t i : face) {
      level.p1[i] = center[i] + radius * level.direction[i] / level.distance;
      if (level.p1[i] < 0.0) nonnegative = false;
    }
    if (nonnegative) {
      level.exit = ProjectionLevel::Exit::OnSphere;
      result.p = level.p1;
      result.levels.push_back(std::move(level));
      break;
    }

    level.p2 = sparsemax_on(level.p1, face);
    level.p2_support = support_of(level.p2);
    level.exit = ProjectionLevel::Exit::Recurse;

    Vector next_center = barycenter(level.p2_support, k);
    double offset2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double d = center[i] - next_center[i];
      offset2 += d * d;
    }
    radius = std::sqrt(std::max(radius * radius - offset2, 0.0));
    face = level.p2_support;
    input = level.p2;
    center = std::move(next_center);
    result.levels.push_back(std::move(level));
  }

  result.support = support_of(result.p);
  if (result.levels.size() == 1) {
    switch (result.levels.front().exit) {
      case ProjectionLevel::Exit::Feasible: result.stage = Stage::Sparsemax; break;
      case ProjectionLevel::Exit::OnSphere: result.stage = Stage::Circle; break;
      default: result.stage = Stage::Vertex; break;
    }
  } else {
    result.stage = result.support.size() == 1 ? Stage::Vertex : Stage::Face;
  }
  return result;
}

ProjectionResult sparsestmax(std::span<const double> z, double r) {
  check_logits(z, "sparsestmax");
  return sparsestmax(z, r, SimplexGeometry::of(z.size()));
}

Vector sparsestmax_vjp(const ProjectionResult& result,
                       std::span<const double> upstream) {
  if (result.levels.empty()) {
    throw InvalidState("sparsestmax_vjp: projection result carries no saved levels");
  }
  const std::size_t k = result.p.size();
  if (upstream.size() != k) {
    throw InvalidInput("sparsestmax_vjp: upstream has " + std::to_string(upstream.size()) +
                       " entries, expected " + std::to_string(k));
  }

  Vector g(upstream.begin(), upstream.end());
  for (auto it = result.levels.rbegin(); it != result.levels.rend(); ++it) {
    const ProjectionLevel& level = *it;
    if (level.p0.size() != k || level.direction.size() != k) {
      throw InvalidState("sparsestmax_vjp: saved intermediates are incomplete");
    }
    Vector g_p0;
    switch (level.exit) {
      case ProjectionLevel::Exit::Vertex:
        return Vector(k, 0.0);
      case ProjectionLevel::Exit::Feasible:
        g_p0 = std::move(g);
        break;
      case ProjectionLevel::Exit::OnSphere:
        g_p0 = radial_vjp(level, g);
        break;
      case ProjectionLevel::Exit::Recurse: {
        if (level.p2.size() != k) {
          throw InvalidState("sparsestmax_vjp: saved intermediates are incomplete");
        }
        const Vector g_p1 = sparsemax_vjp_on(level.p2_support, g);
        g_p0 = radial_vjp(level, g_p1);
        break;
      }
    }
    g = sparsemax_vjp_on(level.p0_support, g_p0);
  }
  // The result only depends on z through its restriction to the final face,
  // so dropped coordinates get exact zeros instead of round-off.
  for (std::size_t i = 0; i < k; ++i) {
    if (result.p[i] == 0.0) g[i] = 0.0;
  }
  return g;
}

RadiusSchedule RadiusSchedule::linear(std::size_t total_steps,
                                      const SimplexGeometry& geometry,
                                      double r_start, double r_end) {
  RadiusSchedule s;
  s.r_start = r_start;
  s.r_end = r_end;
  s.total_steps = total_steps;
  s.clamp_at = geometry.r_circum;
  return s;
}

RadiusSchedule RadiusSchedule::through(std::size_t total_steps,
                                       const SimplexGeometry& geometry,
                                       std::size_t step, double radius) {
  if (step == 0 || step >= total_steps) {
    throw InvalidInput("radius schedule: waypoint step must lie strictly inside (0, " +
                       std::to_string(total_steps) + ")");
  }
  RadiusSchedule s = linear(total_steps, geometry, 0.0, geometry.r_circum);
  s.knee_step = step;
  s.knee_radius = radius;
  return s;
}

double schedule_radius(const RadiusSchedule& schedule, std::size_t step) {
  if (schedule.total_steps == 0) {
    throw InvalidInput("radius schedule: total_steps must be positive");
  }
  if (step > schedule.total_steps) {
    throw InvalidInput("radius schedule: step " + std::to_string(step) +
                       " is past total_steps " + std::to_string(schedule.total_steps));
  }
  const double t = static_cast<double>(step);
  double value;
  if (schedule.knee_step == 0) {
    value = schedule.r_start + (schedule.r_end - schedule.r_start) * t /
                                   static_cast<double>(schedule.total_steps);
  } else if (step <= schedule.knee_step) {
    value = schedule.r_start + (schedule.knee_radius - schedule.r_start) * t /
                                   static_cast<double>(schedule.knee_step);
  } else {
    const double span = static_cast<double>(schedule.total_steps - schedule.knee_step);
    value = schedule.knee_radius + (schedule.r_end - schedule.knee_radius) *
                                       (t - static_cast<double>(schedule.knee_step)) / span;
  }
  return std::min(schedule.clamp_at, value);
}

std::size_t argmax_index(std::span<const double> v) {
  if (v.empty()) throw InvalidInput("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Vector argmax_onehot(std::span<const double> p) {
  Vector out(p.size(), 0.0);
  out[argmax_index(p)] = 1.0;
  return out;
}

Support support_of(std::span<const double> p) {
  Support s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s.push_back(i);
  }
  return s;
}

bool is_one_hot(std::span<const double> p) {
  std::size_t ones = 0;
  for (double v : p) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      return false;
    }
  }
  return ones == 1;
}

}  // namespace ssn
