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

// Interior-point KKT system of the parametric OCP.
//
// With the Lagrangian
//
//   L = sum_k cost_k + chi_0'(x_0 - s) + sum_k chi_{k+1}'(f(z_k) - x_{k+1})
//       + zeta'(u_0 - a) + sum_k nu_k' g(u_k) + sum_k mu_k' h(z_k) + mu_N' hf(z_N)
//
// the residual xi(y; s, a, theta, tau) stacks
//
//   grad_z L,  x_0 - s,  f(z_k) - x_{k+1},  g + t_nu,  h + t_mu,  hf + t_muN,
//   nu.*t_nu - tau,  mu.*t_mu - tau,  u_0 - a
//
// in the packed ordering of Layout. Its Jacobian with respect to y is the
// Newton matrix of the interior-point method and the matrix inverted by the
// implicit-function sensitivities.

#pragma once

#include <optional>
#include <vector>

#include "diffmpc/primal_dual.hpp"

namespace diffmpc {

enum class HessianMode { kExact, kGaussNewton, kRegularized };

// First-order data of one stage at a point.
struct StageEval {
  Vector z;             // stage vector the data was evaluated at
  double cost = 0.0;    // stage cost + slack penalty
  Vector cost_grad;     // nz
  Vector dyn;           // f(z_k), empty at k = N
  Matrix dyn_jac;       // nx x nz
  Vector con;           // [g; h] (only h at k = N), nc
  Matrix con_jac;       // nc x nz
};

struct Linearization {
  Layout layout;
  std::vector<StageEval> stages;  // N + 1
  std::vector<Matrix> hessians;   // per stage nz x nz; empty if not requested
  double objective = 0.0;
};

// Evaluates all stage functions at the packed point y. When a Hessian mode
// is given, also forms the stage Hessians of the Lagrangian:
//   exact / regularized: cost + chi-weighted dynamics + lambda-weighted
//                        constraint curvature,
//   Gauss-Newton:        cost curvature only.
Linearization linearize(const ParametricOcp& ocp, const Layout& layout,
                        const Vector& y,
                        std::optional<HessianMode> hessian = std::nullopt);

// Fills lin.hessians at the packed point y (multipliers are read from y).
void compute_hessians(const ParametricOcp& ocp, Linearization& lin,
                      const Vector& y, HessianMode mode);

// Residual of the (QP-)KKT system. Multipliers and inequality slacks are
// read from `duals`. If `dz` is given, its z-slots are primal steps from
// the linearization point and the QP model
//   grad + H dz, f + F dz - (x_next + dx_next), c + J dz
// is used; without dz this is the exact NLP residual at the linearization
// point.
Vector kkt_residual_from(const Linearization& lin, const Vector& duals,
                         const Vector* dz, const Vector& s,
                         const std::optional<Vector>& a, double tau);

// Interior-point residual of the NLP at `point`. Throws DomainError if the
// point is not strictly interior.
PackedVector kkt_residual(const ParametricOcp& ocp, const Vector& s,
                          const std::optional<Vector>& a,
                          const PrimalDualPoint& point, double tau);

// Lagrangian value at (s, a, point); the zeta term is present in action mode.
double lagrangian(const ParametricOcp& ocp, const Vector& s,
                  const std::optional<Vector>& a, const PrimalDualPoint& point);

// Objective (costs plus slack penalties) at the primal part of `point`.
double objective(const ParametricOcp& ocp, const PrimalDualPoint& point);

// Stage blocks of the exact Lagrangian Hessian with respect to z_k.
// Throws CapabilityError if a callback lacks second derivatives.
std::vector<Matrix> exact_hessian(const ParametricOcp& ocp,
                                  const PrimalDualPoint& point);

// Stage-structured Newton matrix: per stage the Hessian block, the dynamics
// Jacobian, the inequality Jacobian and the current multipliers and slacks.
struct KktStage {
  Matrix H;    // nz x nz
  Matrix F;    // nx x nz (k < N)
  Matrix J;    // nc x nz
  Vector lam;  // nc
  Vector t;    // nc
};

struct KktSystem {
  Layout layout;
  std::vector<KktStage> stages;
};

// Pairs the linearization's Jacobians with stage Hessians and the
// multipliers/slacks stored in the packed vector `duals`.
KktSystem make_kkt_system(const Linearization& lin,
                          const std::vector<Matrix>& hessians,
                          const Vector& duals);

// Dense d xi / d y in packed ordering.
Matrix assemble_kkt_matrix(const KktSystem& sys);

// (d xi / d y) * w without forming the matrix; w has one column per vector.
Matrix apply_kkt_matrix(const KktSystem& sys, const Matrix& w);

// Helpers shared by the solver: mean complementarity and interiority.
double mean_complementarity(const Layout& layout, const Vector& y);
bool interior(const Layout& layout, const Vector& y);

}  // namespace diffmpc
