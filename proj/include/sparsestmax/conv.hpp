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

// Minimal direct 2-D convolution (stride 1, symmetric zero padding). Enough
// for BN folding checks and the toy network; not tuned for speed.

#ifndef SPARSESTMAX_CONV_HPP_
#define SPARSESTMAX_CONV_HPP_

#include <cstddef>
#include <vector>

#include "sparsestmax/tensor.hpp"

namespace ssn {

struct ConvWeights {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::vector<double> weight;  // [out][in][kh][kw]
  std::vector<double> bias;    // [out]; empty means no bias

  ConvWeights() = default;
  ConvWeights(std::size_t out, std::size_t in, std::size_t kh, std::size_t kw,
              bool with_bias = true);

  double& at(std::size_t o, std::size_t i, std::size_t a, std::size_t b) {
    return weight[((o * in_channels + i) * kernel_h + a) * kernel_w + b];
  }
  double at(std::size_t o, std::size_t i, std::size_t a, std::size_t b) const {
    return weight[((o * in_channels + i) * kernel_h + a) * kernel_w + b];
  }
};

Tensor4 conv2d(const Tensor4& x, const ConvWeights& w, std::size_t pad);

struct ConvGradients {
  Tensor4 dx;
  std::vector<double> dweight;
  std::vector<double> dbias;
};

ConvGradients conv2d_backward(const Tensor4& x, const ConvWeights& w, std::size_t pad,
                              const Tensor4& dy, bool need_dx = true);

}  // namespace ssn

#endif  // SPARSESTMAX_CONV_HPP_
