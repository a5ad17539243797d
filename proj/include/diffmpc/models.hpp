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

// Problem builders for the shipped examples and for generic linear-quadratic
// test instances.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "diffmpc/envs.hpp"
#include "diffmpc/ocp.hpp"

namespace diffmpc {

// Discounted linear MPC with learnable offset, model bias and linear cost:
//
//   min V0 + gamma^N/2 x_N' S x_N + sum_k f'[x_k; u_k]
//       + sum_k gamma^k/2 (|x_k|^2 + |u_k|^2 + w' sigma_k)
//   s.t. x_{k+1} = A x_k + B u_k + b,  x_0 = s,
//        lb - sigma_k <= x_k <= ub + sigma_k,  sigma_k >= 0  (k = 1..N),
//        -1 <= u_k <= 1.
//
// x_0 is pinned to s, so stage 0 carries no state bounds.
// theta = (V0, b, f, A row-major, B), 12 entries. S solves the DARE of the
// initial model with identity weights. The terminal stage carries the
// same relaxed bounds with penalty gamma^N/2 w' sigma_N.
struct LtiOcpConfig {
  int N = 40;
  double gamma = 0.9;
  Eigen::Vector2d w{100.0, 100.0};
  Eigen::Vector2d lb{0.0, -1.0};
  Eigen::Vector2d ub{1.0, 1.0};
  double u_min = -1.0;
  double u_max = 1.0;
  Eigen::Matrix2d A{{1.0, 0.25}, {0.0, 1.0}};
  Eigen::Vector2d B{0.0312, 0.25};
};

ParametricOcp make_lti_ocp(const LtiOcpConfig& config = {});

// Stabilizing solution of P = A'PA - A'PB (R + B'PB)^{-1} B'PA + Q.
// Throws SolverError if the fixed-point iteration does not converge.
Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                  const Matrix& R);

// Chain-mass tracking OCP. theta = [vec(Q); vec(R)] (column-major, dense),
// n_theta = nx^2 + nu^2; Q also weights the terminal state. Inputs are
// bounded componentwise by u_max; there are no state constraints.
struct ChainMassOcpConfig {
  int N = 20;
  double u_max = 1.0;
  double q_weight = 1.0;  // initial Q = q_weight * I
  double r_weight = 0.1;  // initial R = r_weight * I
};

struct ChainMassProblem {
  ParametricOcp ocp;
  Vector x0;    // start: rest configuration with the end displaced
  Vector xref;  // target: rest configuration
};

ChainMassProblem make_chain_mass_ocp(const ChainMassParams& params,
                                     const ChainMassOcpConfig& config = {});

// RK4-discretized chain dynamics as a theta-free stage function.
StageFunctionPtr make_chain_mass_dynamics(const ChainMassParams& params);

// Reference end positions of the chain-mass start and target configurations.
Eigen::Vector3d chain_mass_target_end(const ChainMassParams& params);
Eigen::Vector3d chain_mass_start_end(const ChainMassParams& params);

// Theta-free linear-quadratic OCP:
//
//   min sum_k 0.5 z_k' H_k z_k + q_k' z_k + 0.5 x_N' H_N x_N + q_N' x_N
//   s.t. x_{k+1} = A_k x_k + B_k u_k + c_k,  C_k z_k <= d_k (k < N),
//        optional input bounds u_lo <= u_k <= u_hi.
//
// z_k = [x_k; u_k]; there are no slacks.
struct LqProblem {
  int nx = 0, nu = 0, N = 1;
  std::vector<Matrix> H;  // N + 1 (terminal: nx x nx)
  std::vector<Vector> q;  // N + 1
  std::vector<Matrix> A, B;
  std::vector<Vector> c;
  std::vector<Matrix> C;  // N, possibly zero rows
  std::vector<Vector> d;
  std::vector<Matrix> C_N;  // optional terminal rows on x_N (size 0 or 1)
  std::vector<Vector> d_N;
  bool input_bounds = false;
  Vector u_lo, u_hi;
};

ParametricOcp make_lq_ocp(const LqProblem& lq);

}  // namespace diffmpc
