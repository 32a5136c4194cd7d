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

#include "sparsestmax/conv.hpp"

#include <string>

#include "sparsestmax/error.hpp"

namespace ssn {

ConvWeights::ConvWeights(std::size_t out, std::size_t in, std::size_t kh, std::size_t kw,
                         bool with_bias)
    : out_channels(out), in_channels(in), kernel_h(kh), kernel_w(kw),
      weight(out * in * kh * kw, 0.0) {
  if (with_bias) bias.assign(out, 0.0);
}

namespace {

Shape4 output_shape(const Tensor4& x, const ConvWeights& w, std::size_t pad) {
  const Shape4& s = x.shape();
  if (s.c != w.in_channels) {
    throw InvalidInput("conv2d: input has " + std::to_string(s.c) +
                       " channels, weights expect " + std::to_string(w.in_channels));
  }
  if (s.h + 2 * pad < w.kernel_h || s.w + 2 * pad < w.kernel_w) {
    throw InvalidInput("conv2d: kernel larger than padded input");
  }
  if (!w.bias.empty() && w.bias.size() != w.out_channels) {
    throw InvalidInput("conv2d: bias length does not match output channels");
  }
  return {s.n, w.out_channels, s.h + 2 * pad - w.kernel_h + 1,
          s.w + 2 * pad - w.kernel_w + 1};
}

}  // namespace

Tensor4 conv2d(const Tensor4& x, const ConvWeights& w, std::size_t pad) {
  const Shape4 os = output_shape(x, w, pad);
  const Shape4& is = x.shape();
  Tensor4 y(os);
  const long p = static_cast<long>(pad);
  for (std::size_t n = 0; n < os.n; ++n) {
    for (std::size_t o = 0; o < os.c; ++o) {
      const double b = w.bias.empty() ? 0.0 : w.bias[o];
      for (std::size_t i = 0; i < os.h; ++i) {
        for (std::size_t j = 0; j < os.w; ++j) {
          double acc = b;
          for (std::size_t c = 0; c < is.c; ++c) {
            for (std::size_t a = 0; a < w.kernel_h; ++a) {
              const long yi = static_cast<long>(i + a) - p;
              if (yi < 0 || yi >= static_cast<long>(is.h)) continue;
              for (std::size_t bb = 0; bb < w.kernel_w; ++bb) {
                const long xj = static_cast<long>(j + bb) - p;
                if (xj < 0 || xj >= static_cast<long>(is.w)) continue;
                acc += w.at(o, c, a, bb) * x(n, c, static_cast<std::size_t>(yi),
                                             static_cast<std::size_t>(xj));
              }
            }
          }
          y(n, o, i, j) = acc;
        }
      }
    }
  }
  return y;
}

ConvGradients conv2d_backward(const Tensor4& x, const ConvWeights& w, std::size_t pad,
                              const Tensor4& dy, bool need_dx) {
  const Shape4 os = output_shape(x, w, pad);
  if (!(dy.shape() == os)) {
    throw InvalidInput("conv2d_backward: upstream shape " + dy.shape().str() +
                       " does not match output shape " + os.str());
  }
  const Shape4& is = x.shape();
  ConvGradients g;
  if (need_dx) g.dx = Tensor4(is);
  g.dweight.assign(w.weight.size(), 0.0);
  g.dbias.assign(w.bias.empty() ? 0 : w.out_channels, 0.0);
  const long p = static_cast<long>(pad);

  for (std::size_t n = 0; n < os.n; ++n) {
    for (std::size_t o = 0; o < os.c; ++o) {
      for (std::size_t i = 0; i < os.h; ++i) {
        for (std::size_t j = 0; j < os.w; ++j) {
          const double go = dy(n, o, i, j);
          if (!g.dbias.empty()) g.dbias[o] += go;
          for (std::size_t c = 0; c < is.c; ++c) {
            for (std::size_t a = 0; a < w.kernel_h; ++a) {
              const long yi = static_cast<long>(i + a) - p;
              if (yi < 0 || yi >= static_cast<long>(is.h)) continue;
              for (std::size_t bb = 0; bb < w.kernel_w; ++bb) {
                const long xj = static_cast<long>(j + bb) - p;
                if (xj < 0 || xj >= static_cast<long>(is.w)) continue;
                const auto ui = static_cast<std::size_t>(yi);
                const auto uj = static_cast<std::size_t>(xj);
                g.dweight[((o * w.in_channels + c) * w.kernel_h + a) * w.kernel_w + bb] +=
                    go * x(n, c, ui, uj);
                if (need_dx) g.dx(n, c, ui, uj) += go * w.at(o, c, a, bb);
              }
            }
          }
        }
      }
    }
  }
  return g;
}

}  // namespace ssn
