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

#ifndef SPARSESTMAX_ERROR_HPP_
#define SPARSESTMAX_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssn {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: non-finite values, shape mismatches, out-of-range options.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// An object is used in a state that does not support the operation.
class InvalidState : public Error {
 public:
  using Error::Error;
};

// A gate was expected to be one-hot but is not.
class NotConverged : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

class TrainingFailed : public Error {
 public:
  TrainingFailed(std::size_t step, const std::string& what)
      : Error("training failed at step " + std::to_string(step) + ": " + what),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace ssn

#endif  // SPARSESTMAX_ERROR_HPP_
