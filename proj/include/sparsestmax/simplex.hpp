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

// Projections onto the probability simplex: softmax, sparsemax and the
// radius-constrained SparsestMax, together with their exact derivatives.
//
// All functions here are pure; results are plain values and may be shared
// between threads freely.

#ifndef SPARSESTMAX_SIMPLEX_HPP_
#define SPARSESTMAX_SIMPLEX_HPP_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ssn {

using Vector = std::vector<double>;
using Support = std::vector<std::size_t>;

// Dense row-major K x K matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }
};

// Regular (K-1)-simplex embedded in R^K.
struct SimplexGeometry {
  std::size_t k = 0;
  Vector center;             // all entries 1/K
  double r_circum = 0.0;     // sqrt((K-1)/K)
  double r_inscribed = 0.0;  // sqrt(1/(K(K-1)))

  static SimplexGeometry of(std::size_t k);
};

enum class Stage { Sparsemax, Circle, Face, Vertex };

std::string_view stage_name(Stage s);

// One recursion level of the SparsestMax evaluation. Level 0 works on the
// whole simplex; each deeper level works on the face spanned by `face`.
struct ProjectionLevel {
  enum class Exit { Feasible, OnSphere, Vertex, Recurse };

  Support face;        // active coordinates at this level
  Vector input;        // z at level 0, p2 of the parent level otherwise
  double radius = 0.0;
  Vector center;       // barycenter of `face`
  Vector p0;           // sparsemax of `input` over `face`
  Support p0_support;
  Vector direction;    // p0 - center, or the fallback direction if degenerate
  double distance = 0.0;
  bool degenerate = false;
  Vector p1;           // point on the sphere, if computed
  Vector p2;           // sparsemax(p1), if computed
  Support p2_support;
  Exit exit = Exit::Feasible;
};

struct ProjectionResult {
  Vector p;
  Stage stage = Stage::Sparsemax;
  Support support;
  std::vector<ProjectionLevel> levels;

  std::size_t depth() const { return levels.empty() ? 0 : levels.size() - 1; }
};

// exp(z_k - max z) / sum_j exp(z_j - max z).
Vector softmax(std::span<const double> z);

// Threshold tau(z) of the sorted-prefix rule; sparsemax(z)_i = max(z_i - tau, 0).
double sparsemax_threshold(std::span<const double> z);
Vector sparsemax(std::span<const double> z);
Matrix sparsemax_jacobian(std::span<const double> z);

// Radius r is clamped to geometry.r_circum. Throws InvalidInput for r < 0,
// non-finite input, or a geometry of the wrong dimension.
ProjectionResult sparsestmax(std::span<const double> z, double r,
                             const SimplexGeometry& geometry);
ProjectionResult sparsestmax(std::span<const double> z, double r);

// upstream^T * d(result.p)/dz.
Vector sparsestmax_vjp(const ProjectionResult& result,
                       std::span<const double> upstream);

// Piecewise-linear radius schedule. Without a knee it is the straight line
// from r_start (step 0) to r_end (total_steps); a knee inserts one waypoint.
struct RadiusSchedule {
  double r_start = 0.0;
  double r_end = 1.0;
  std::size_t total_steps = 1;
  double clamp_at = 1.0;
  std::size_t knee_step = 0;  // 0 disables the knee
  double knee_radius = 0.0;

  static RadiusSchedule linear(std::size_t total_steps,
                               const SimplexGeometry& geometry,
                               double r_start = 0.0, double r_end = 1.0);
  // Reaches `radius` at `step`, then continues linearly to r_circum at
  // total_steps.
  static RadiusSchedule through(std::size_t total_steps,
                                const SimplexGeometry& geometry,
                                std::size_t step, double radius);
};

double schedule_radius(const RadiusSchedule& schedule, std::size_t step);

// One-hot at the largest entry, ties broken by lowest index.
Vector argmax_onehot(std::span<const double> p);

std::size_t argmax_index(std::span<const double> v);
Support support_of(std::span<const double> p);
bool is_one_hot(std::span<const double> p);

}  // namespace ssn

#endif  // SPARSESTMAX_SIMPLEX_HPP_
