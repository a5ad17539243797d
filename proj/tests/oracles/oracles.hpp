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

// Reference computations used by the tests. None of them call into the
// solver or the sensitivity code: QPs are assembled densely over all stages
// and solved through their KKT conditions, LQ problems through the textbook
// dynamic-programming recursion, and derivatives by finite differences.

#pragma once

#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "diffmpc/models.hpp"

namespace oracle {

using diffmpc::Matrix;
using diffmpc::Vector;

// min 0.5 w'Hw + g'w  s.t.  Aeq w = beq,  Ain w <= bin.
// Variable order: x_0 .. x_N, then u_0 .. u_{N-1}.
struct DenseQp {
  int nx = 0, nu = 0, N = 0;
  Matrix H;
  Vector g;
  Matrix Aeq;
  Vector beq;
  Matrix Ain;
  Vector bin;

  int x(int k) const { return k * nx; }
  int u(int k) const { return (N + 1) * nx + k * nu; }
  int size() const { return (N + 1) * nx + N * nu; }
};

DenseQp assemble(const diffmpc::LqProblem& lq, const Vector& s);

struct QpSolution {
  Vector w;
  Vector y_eq;
  Vector y_in;  // zero outside the active set
  std::vector<int> active;
  double violation = 0.0;  // largest KKT violation, see kkt_violation
};

// Solves the equality-constrained QP with the given inequality rows held
// active. Returns nullopt if the KKT matrix is singular.
std::optional<QpSolution> solve_active(const DenseQp& qp,
                                       const std::vector<int>& active);

// max of stationarity, primal infeasibility, multiplier sign and
// complementarity violations. For a convex QP a (near) zero value certifies
// global optimality.
double kkt_violation(const DenseQp& qp, const QpSolution& sol);

// Tries active sets {i : bin_i - Ain_i w <= tol} of a candidate point for a
// range of tolerances and returns the first that is certified to `cert_tol`.
std::optional<QpSolution> certify_near(const DenseQp& qp, const Vector& w,
                                       double cert_tol);

// Exhaustive search over all 2^m active sets (m <= 20).
std::optional<QpSolution> enumerate_active_sets(const DenseQp& qp,
                                                double cert_tol);

// Finite-horizon LQ by dynamic programming on the value function
// V_k(x) = 0.5 x'P_k x + p_k'x; ignores all inequality data.
struct LqrSolution {
  std::vector<Matrix> K;    // u_k = K_k x_k + kff_k
  std::vector<Vector> kff;
  std::vector<Vector> x;    // N + 1
  std::vector<Vector> u;    // N
  double cost = 0.0;
};

LqrSolution lqr(const diffmpc::LqProblem& lq, const Vector& s);

// Double integrator x = (position, velocity), dt = 0.1, unit weights.
diffmpc::LqProblem double_integrator(int N);

// Random strictly convex LQ instance with input bounds and optional state
// rows that u = 0 keeps feasible.
diffmpc::LqProblem random_lq(std::mt19937_64& rng, int N, int nx, int nu,
                             bool constrained);

// Central differences of a vector-valued function.
Matrix central_jacobian(const std::function<Vector(const Vector&)>& f,
                        const Vector& x, double h);
Vector central_gradient(const std::function<double(const Vector&)>& f,
                        const Vector& x, double h);

// Largest |a_i - b_i| / max(|b_i|, floor) over all entries.
double max_entry_rel_err(const Matrix& a, const Matrix& b, double floor = 1.0);

}  // namespace oracle
