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

#include "sparsestmax/tensor.hpp"

#include <cmath>

#include "sparsestmax/error.hpp"

namespace ssn {

std::string Shape4::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) +
         "x" + std::to_string(w);
}

Tensor4::Tensor4(Shape4 shape, double fill) : shape_(shape) {
  if (shape.size() == 0) {
    throw InvalidInput("tensor dims must be positive, got " + shape.str());
  }
  data_.assign(shape.size(), fill);
}

Tensor4::Tensor4(Shape4 shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (shape.size() == 0) {
    throw InvalidInput("tensor dims must be positive, got " + shape.str());
  }
  if (data_.size() != shape.size()) {
    throw InvalidInput("tensor data has " + std::to_string(data_.size()) +
                       " entries but shape " + shape.str() + " needs " +
                       std::to_string(shape.size()));
  }
}

void Tensor4::check_finite(const char* what) const {
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw InvalidInput(std::string(what) + ": tensor contains a non-finite value");
    }
  }
}

}  // namespace ssn
