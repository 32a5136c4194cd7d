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

#ifndef SPARSESTMAX_FORMAT_HPP_
#define SPARSESTMAX_FORMAT_HPP_

#include <cstdio>
#include <string>

namespace ssn {

// Numbers leave the library with 12 significant digits.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline double round_significant(double v) { return std::stod(format_number(v)); }

}  // namespace ssn

#endif  // SPARSESTMAX_FORMAT_HPP_
