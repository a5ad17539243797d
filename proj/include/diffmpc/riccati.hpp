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

// Riccati factorization of the interior-point Newton matrix.
//
// The inequality rows are condensed into the stage Hessians,
//   Ht_k = H_k + J_k' diag(lam_k ./ t_k) J_k,
// leaving an equality-constrained LQ problem whose stage vector splits into
// a pinned prefix s_k (x_k, plus u_0 in action mode) and a free suffix v_k.
// The backward sweep computes the cost-to-go Hessians P_k and feedback gains
// K_k once; each right-hand side then costs one backward and one forward pass
// of matrix-vector work. Right-hand sides can be batched column-wise.
//
// Near the end of a solve lam ./ t spans many orders of magnitude and the
// condensed sweep alone loses digits, so each backsolve is followed by
// iterative refinement against the uncondensed matrix.

#pragma once

#include <atomic>
#include <vector>

#include "diffmpc/kkt.hpp"

namespace diffmpc {

class RiccatiFactorization {
 public:
  struct Stage {
    Matrix Ht;                // condensed Hessian
    Matrix F;                 // dynamics Jacobian (k < N)
    Matrix J;                 // inequality Jacobian
    Vector lam, t;            // multipliers and slacks
    Matrix P;                 // cost-to-go Hessian w.r.t. s_k
    Matrix K;                 // v = K s + kff
    Eigen::LLT<Matrix> Rbar;  // free-block reduced Hessian
  };

  const Layout& layout() const { return layout_; }
  const std::vector<Stage>& stages() const { return stages_; }
  // The factorized (shifted) matrix times w.
  Matrix apply(const Matrix& w) const;

 private:
  friend RiccatiFactorization riccati_factorize(const KktSystem&,
                                                const std::vector<double>&);
  Layout layout_;
  std::vector<Stage> stages_;
  KktSystem system_;
  std::vector<double> shifts_;
};

// Factorizes the Newton matrix of `sys`. `shifts[k]` (optional, per stage)
// adds shifts[k] * I to the stage Hessian before condensing. Throws
// FactorizationError naming the first stage whose reduced Hessian is not
// positive definite.
RiccatiFactorization riccati_factorize(const KktSystem& sys,
                                       const std::vector<double>& shifts = {});

// Solves M w = rhs for every column of rhs (packed ordering), with at most
// `kRefinementSteps` refinement passes.
inline constexpr int kRefinementSteps = 3;
Matrix riccati_backsolve(const RiccatiFactorization& fact, const Matrix& rhs);
Vector riccati_backsolve(const RiccatiFactorization& fact, const Vector& rhs);
PackedVector riccati_backsolve(const RiccatiFactorization& fact,
                               const PackedVector& rhs);

// Number of riccati_factorize calls since process start (instrumentation).
long riccati_factorization_count();

}  // namespace diffmpc
