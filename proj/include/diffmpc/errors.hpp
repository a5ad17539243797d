// Copyright 2026 The diffmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace diffmpc {

// Sizes of vectors or callbacks disagree with the declared dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A point lies outside the domain of an operation (e.g. non-interior).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A caller-side precondition does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A model lacks a derivative the operation needs.
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Riccati stage factorization failed (reduced Hessian not positive definite).
class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(int stage, const std::string& what)
      : std::runtime_error(what), stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

// The KKT Jacobian used for sensitivities is (numerically) singular.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(double condition_estimate, const std::string& what)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

// A solve did not converge where a converged point was required.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace diffmpc
