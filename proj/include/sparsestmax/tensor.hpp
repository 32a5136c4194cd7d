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

#ifndef SPARSESTMAX_TENSOR_HPP_
#define SPARSESTMAX_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ssn {

struct Shape4 {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t size() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  std::string str() const;

  friend bool operator==(const Shape4&, const Shape4&) = default;
};

// Dense NCHW activation tensor.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, double fill = 0.0);
  Tensor4(Shape4 shape, std::vector<double> data);

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t n, std::size_t c, std::size_t i, std::size_t j) {
    return data_[offset(n, c) + i * shape_.w + j];
  }
  double operator()(std::size_t n, std::size_t c, std::size_t i, std::size_t j) const {
    return data_[offset(n, c) + i * shape_.w + j];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }

  // Contiguous H*W plane of sample n, channel c.
  std::span<double> plane(std::size_t n, std::size_t c) {
    return {data_.data() + offset(n, c), shape_.plane()};
  }
  std::span<const double> plane(std::size_t n, std::size_t c) const {
    return {data_.data() + offset(n, c), shape_.plane()};
  }

  // Throws InvalidInput if any entry is NaN or infinite.
  void check_finite(const char* what) const;

 private:
  std::size_t offset(std::size_t n, std::size_t c) const {
    return (n * shape_.c + c) * shape_.plane();
  }

  Shape4 shape_;
  std::vector<double> data_;
};

}  // namespace ssn

#endif  // SPARSESTMAX_TENSOR_HPP_
