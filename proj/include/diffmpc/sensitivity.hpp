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

// Parametric sensitivities of OCP solutions.
//
// Value and action-value gradients are parameter gradients of the
// Lagrangian at the solution. The policy gradient differentiates the
// interior-point KKT conditions xi(y, theta) = 0 at fixed tau:
//
//   d xi/d y * dy/dtheta = -d xi/d theta,
//
// and keeps the u_0 rows of dy/dtheta. The structured method factorizes
// d xi/d y once by Riccati recursion and back-solves all n_theta columns
// together; the dense method LU-factorizes the assembled matrix.

#pragma once

#include <optional>

#include "diffmpc/solver.hpp"

namespace diffmpc {

enum class GradientMethod { kStructured, kDense, kFiniteDifference };

const char* to_string(GradientMethod method);

struct SensitivityBundle {
  Vector grad_v;
  Vector grad_q;
  Matrix grad_pi;  // nu x n_theta
  GradientMethod method = GradientMethod::kStructured;
  double residual_check = 0.0;
};

struct KktJacobians {
  Matrix d_xi_d_y;
  Matrix d_xi_d_theta;
};

// Gradient of the Lagrangian with respect to theta at a converged solution
// of the respective mode. Throws SolveFailure for unconverged input and
// PreconditionError for a solution of the wrong mode.
Vector grad_v_theta(const ParametricOcp& ocp, const SolveResult& solution_v);
Vector grad_q_theta(const ParametricOcp& ocp, const SolveResult& solution_q);

// Both KKT Jacobians in packed ordering at an arbitrary interior point
// (exact Lagrangian Hessian; tau only enters the residual, not these).
KktJacobians kkt_jacobians(const ParametricOcp& ocp, const Vector& s,
                           const std::optional<Vector>& a,
                           const PrimalDualPoint& point, double tau);

// d xi / d theta at a packed point.
Matrix residual_theta_jacobian(const ParametricOcp& ocp, const Layout& layout,
                               const Vector& y);

struct SensitivityOptions {
  GradientMethod method = GradientMethod::kStructured;
  // Evaluates || d xi/dy * dy/dtheta + d xi/dtheta ||_inf after solving.
  bool residual_check = true;
  // Dense method: reciprocal condition estimates below this raise
  // SingularityError.
  double min_rcond = 1e-14;
};

struct SolutionSensitivity {
  Matrix dy_dtheta;  // packed rows x n_theta
  double residual_check = 0.0;
};

// Sensitivity of the full primal-dual solution (either mode; in action mode
// a is held fixed).
SolutionSensitivity solution_sensitivity(const ParametricOcp& ocp,
                                         const SolveResult& solution,
                                         const SensitivityOptions& options);

// || d xi/dy * dy_dtheta + d xi/dtheta ||_inf at the solution.
double ift_residual(const ParametricOcp& ocp, const SolveResult& solution,
                    const Matrix& dy_dtheta);

struct PolicyGradient {
  Matrix grad_pi;  // nu x n_theta
  double residual_check = 0.0;
};

// d u_0* / d theta from a converged value-mode solution.
PolicyGradient policy_gradient(const ParametricOcp& ocp,
                               const SolveResult& solution_v,
                               const SensitivityOptions& options = {});

// Forward differences (pi(theta + h e_i) - pi(theta)) / h with one solve per
// parameter, each warm-started from the base solution. `solves` (optional)
// receives the number of solves performed.
Matrix fd_policy_gradient(const ParametricOcp& ocp,
                          const SolveResult& base_v, double step,
                          const SolverSettings& settings,
                          int* solves = nullptr);

}  // namespace diffmpc
