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

// MPC as a function approximator: V(s), Q(s, a) and pi(s) = u_0*.

#pragma once

#include <optional>

#include "diffmpc/sensitivity.hpp"

namespace diffmpc {

class MpcAgent {
 public:
  struct Evaluation {
    double value = 0.0;
    SolveResult solution;
  };
  struct Action {
    Vector a;
    SolveResult solution;
  };

  MpcAgent(ParametricOcp ocp, SolverSettings settings);

  const ParametricOcp& ocp() const { return ocp_; }
  const SolverSettings& settings() const { return settings_; }
  const Vector& theta() const { return ocp_.theta(); }

  // Replaces theta; cached results are no longer returned (previous
  // solutions are still used as warm starts).
  void set_theta(const Vector& theta);

  // Value-NLP solve. A repeated call at the same state and theta returns the
  // cached result. Throws SolveFailure if the solver does not converge.
  Evaluation value(const Vector& s);

  // Action-value solve, warm-started from the cached value solution.
  // Throws PreconditionError if g(a) > 0 and SolveFailure on non-convergence.
  Evaluation action_value(const Vector& s, const Vector& a);

  Action act(const Vector& s);

  // Parameter gradients at freshly solved (or cached) points.
  Vector grad_v(const Vector& s);
  Vector grad_q(const Vector& s, const Vector& a);

  // Drops the warm-start and value caches (the next solve starts cold).
  void reset_cache();

 private:
  SolveResult solve(const Vector& s, const std::optional<Vector>& a);
  bool cached(const std::optional<SolveResult>& r, const Vector& s) const;

  ParametricOcp ocp_;
  SolverSettings settings_;
  // Latest solutions; they stay available as warm starts after a theta
  // change but are only returned as results while theta_version_ matches.
  std::optional<SolveResult> last_v_;
  std::optional<SolveResult> last_q_;
  long v_version_ = -1;
  long q_version_ = -1;
  long theta_version_ = 0;
};

}  // namespace diffmpc
