// Copyright 2026 The dp-rezone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPREZONE_ERROR_HPP_
#define DPREZONE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace dprezone {

// Input does not satisfy a documented contract (bad CSV, broken invariant,
// out-of-range parameter). Maps to exit code 1 / HTTP 400.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A dissimilarity side total is zero on ground-truth counts.
class DegenerateDistrictError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Exact enumeration refused because the instance exceeds the size cap.
class SizeCapError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// I/O failures and broken internal invariants. Maps to exit code 2 / HTTP 500.
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dprezone

#endif  // DPREZONE_ERROR_HPP_
