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

#include "diffmpc/models.hpp"

#include <cmath>

#include "diffmpc/functions.hpp"

namespace diffmpc {

namespace {

// theta offsets of the linear example
constexpr int kV0 = 0;
constexpr int kB = 1;   // bias b
constexpr int kF = 3;   // linear cost f
constexpr int kA = 6;   // A, row-major
constexpr int kBu = 10; // input matrix B

struct LtiCost {
  double gamma;
  int rows(int) const { return 1; }
  template <class T>
  void operator()(int k, std::span<const T> z, std::span<const T> th,
                  std::span<T> out) const {
    const double disc = std::pow(gamma, k);
    T v = th[kF] * z[0] + th[kF + 1] * z[1] + th[kF + 2] * z[2];
    v += 0.5 * disc * (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
    if (k == 0) v += th[kV0];
    out[0] = v;
  }
};

struct LtiSlackPenalty {
  double gamma;
  Eigen::Vector2d w;
  int offset;  // first slack entry in z
  static constexpr bool kDependsOnTheta = false;
  int rows(int) const { return 1; }
  template <class T>
  void operator()(int k, std::span<const T> z, std::span<const T>,
                  std::span<T> out) const {
    T v = T(0.0);
    if (static_cast<int>(z.size()) > offset) {
      v = 0.5 * std::pow(gamma, k) * (w[0] * z[offset] + w[1] * z[offset + 1]);
    }
    out[0] = v;
  }
};

struct LtiDynamics {
  int rows(int) const { return 2; }
  template <class T>
  void operator()(int, std::span<const T> z, std::span<const T> th,
                  std::span<T> out) const {
    out[0] = th[kA] * z[0] + th[kA + 1] * z[1] + th[kBu] * z[2] + th[kB];
    out[1] = th[kA + 2] * z[0] + th[kA + 3] * z[1] + th[kBu + 1] * z[2] +
             th[kB + 1];
  }
};

struct LtiInputBounds {
  double lo, hi;
  static constexpr bool kDependsOnTheta = false;
  int rows(int) const { return 2; }
  template <class T>
  void operator()(int, std::span<const T> z, std::span<const T>,
                  std::span<T> out) const {
    out[0] = z[2] - hi;
    out[1] = lo - z[2];
  }
};

// lb - sigma <= x <= ub + sigma, sigma >= 0; x at z[0..1], sigma at
// z[offset..offset+1]. Stages without slacks have no rows.
struct LtiStateBounds {
  Eigen::Vector2d lb, ub;
  int offset;
  std::vector<int> nh;
  static constexpr bool kDependsOnTheta = false;
  int rows(int k) const { return nh[k]; }
  template <class T>
  void operator()(int k, std::span<const T> z, std::span<const T>,
                  std::span<T> out) const {
    if (nh[k] == 0) return;
    for (int i = 0; i < 2; ++i) {
      const T& s = z[offset + i];
      out[i] = z[i] - ub[i] - s;
      out[2 + i] = lb[i] - z[i] - s;
      out[4 + i] = -s;
    }
  }
};

struct LtiTerminalCost {
  double scale;
  Eigen::Matrix2d S;
  static constexpr bool kDependsOnTheta = false;
  int rows(int) const { return 1; }
  template <class T>
  void operator()(int, std::span<const T> z, std::span<const T>,
                  std::span<T> out) const {
    out[0] = 0.5 * scale *
             (S(0, 0) * z[0] * z[0] + (S(0, 1) + S(1, 0)) * z[0] * z[1] +
              S(1, 1) * z[1] * z[1]);
  }
};

struct ChainDynamics {
  ChainMassParams params;
  static constexpr bool kDependsOnTheta = false;
  int rows(int) const { return params.nx(); }
  template <class T>
  void operator()(int, std::span<const T> z, std::span<const T>,
                  std::span<T> out) const {
    rk4_step(params, z.data(), z.data() + params.nx(), out.data());
  }
};

struct BoxInput {
  int nx, nu;
  double umax;
  static constexpr bool kDependsOnTheta = false;
  int rows(int) const { return 2 * nu; }
  template <class T>
  void operator()(int, std::span<const T> z, std::span<const T>,
                  std::span<T> out) const {
    for (int i = 0; i < nu; ++i) {
      out[i] = z[nx + i] - umax;
      out[nu + i] = -umax - z[nx + i];
    }
  }
};

}  // namespace

Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                  const Matrix& R) {
  Matrix P = Q;
  for (int it = 0; it < 100000; ++it) {
    const Matrix BtP = B.transpose() * P;
    const Matrix K = (R + BtP * B).ldlt().solve(BtP * A);
    Matrix next = Q + A.transpose() * P * A - A.transpose() * P * B * K;
    next = 0.5 * (next + next.transpose()).eval();
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (diff <= 1e-13 * std::max(1.0, P.cwiseAbs().maxCoeff())) return P;
  }
  throw SolverError("DARE iteration did not converge");
}

ParametricOcp make_lti_ocp(const LtiOcpConfig& c) {
  if (c.N < 2) throw PreconditionError("LTI example needs N >= 2");
  ParametricOcp ocp;
  const int N = c.N;
  Dims d = Dims::uniform(2, 1, 12, N, 2, 6, 2, 6, 2);
  d.nh[0] = 0;
  d.ns[0] = 0;
  ocp.dims = d;
  ocp.registry.add("V_0", 1);
  ocp.registry.add("b", 2);
  ocp.registry.add("f", 3);
  ocp.registry.add("A", 4);
  ocp.registry.add("B", 2);

  const Matrix S = solve_dare(c.A, c.B, Matrix::Identity(2, 2),
                              Matrix::Identity(1, 1));
  ocp.stage_cost = make_autodiff(LtiCost{c.gamma});
  ocp.slack_penalty = make_autodiff(LtiSlackPenalty{c.gamma, c.w, 3});
  ocp.dynamics = make_autodiff(LtiDynamics{});
  ocp.input_constraint = make_autodiff(LtiInputBounds{c.u_min, c.u_max});
  ocp.path_constraint = make_autodiff(LtiStateBounds{c.lb, c.ub, 3, d.nh});
  ocp.terminal_cost =
      make_autodiff(LtiTerminalCost{std::pow(c.gamma, N), S});
  ocp.terminal_slack_penalty =
      make_autodiff(LtiSlackPenalty{c.gamma, c.w, 2});
  ocp.terminal_constraint =
      make_autodiff(LtiStateBounds{c.lb, c.ub, 2, d.nh});

  Vector theta = Vector::Zero(12);
  theta.segment(kA, 4) << c.A(0, 0), c.A(0, 1), c.A(1, 0), c.A(1, 1);
  theta.segment(kBu, 2) = c.B;
  ocp.set_theta(theta);
  return ocp;
}

StageFunctionPtr make_chain_mass_dynamics(const ChainMassParams& params) {
  params.check();
  return make_autodiff(ChainDynamics{params});
}

Eigen::Vector3d chain_mass_target_end(const ChainMassParams& p) {
  return Eigen::Vector3d(0.2 * (p.n_mass - 1), 0.0, 0.0);
}

Eigen::Vector3d chain_mass_start_end(const ChainMassParams& p) {
  return chain_mass_target_end(p) + Eigen::Vector3d(0.0, 0.15, 0.05);
}

ChainMassProblem make_chain_mass_ocp(const ChainMassParams& params,
                                     const ChainMassOcpConfig& c) {
  params.check();
  const int nx = params.nx();
  const int nu = params.nu();
  ChainMassProblem out;
  out.xref = chain_mass_equilibrium(params, chain_mass_target_end(params));
  out.x0 = chain_mass_equilibrium(params, chain_mass_start_end(params));

  ParametricOcp& ocp = out.ocp;
  ocp.dims = Dims::uniform(nx, nu, nx * nx + nu * nu, c.N, 2 * nu, 0, 0, 0, 0);
  ocp.registry.add("Q", nx * nx);
  ocp.registry.add("R", nu * nu);
  ocp.stage_cost =
      std::make_shared<DenseQuadraticCost>(out.xref, nu, 0, nx * nx);
  ocp.terminal_cost =
      std::make_shared<DenseQuadraticCost>(out.xref, 0, 0, nx * nx);
  ocp.slack_penalty = std::make_shared<ZeroFunction>(1);
  ocp.terminal_slack_penalty = std::make_shared<ZeroFunction>(1);
  ocp.dynamics = make_chain_mass_dynamics(params);
  ocp.input_constraint = make_autodiff(BoxInput{nx, nu, c.u_max});
  ocp.path_constraint = std::make_shared<ZeroFunction>(0);
  ocp.terminal_constraint = std::make_shared<ZeroFunction>(0);

  Vector theta(nx * nx + nu * nu);
  const Matrix Q = c.q_weight * Matrix::Identity(nx, nx);
  const Matrix R = c.r_weight * Matrix::Identity(nu, nu);
  theta.head(nx * nx) = Eigen::Map<const Vector>(Q.data(), nx * nx);
  theta.tail(nu * nu) = Eigen::Map<const Vector>(R.data(), nu * nu);
  ocp.set_theta(theta);
  return out;
}

ParametricOcp make_lq_ocp(const LqProblem& lq) {
  const int nx = lq.nx, nu = lq.nu, N = lq.N;
  if (static_cast<int>(lq.H.size()) != N + 1 ||
      static_cast<int>(lq.q.size()) != N + 1 ||
      static_cast<int>(lq.A.size()) != N || static_cast<int>(lq.B.size()) != N ||
      static_cast<int>(lq.c.size()) != N) {
    throw DimensionError("LQ problem data does not match N");
  }
  ParametricOcp ocp;
  Dims d = Dims::uniform(nx, nu, 0, N, lq.input_bounds ? 2 * nu : 0, 0, 0, 0,
                         0);
  std::vector<Matrix> Ck(N + 1);
  std::vector<Vector> dk(N + 1);
  for (int k = 0; k < N; ++k) {
    if (static_cast<int>(lq.C.size()) == N && lq.C[k].rows() > 0) {
      Ck[k] = lq.C[k];
      dk[k] = -lq.d[k];
    } else {
      Ck[k] = Matrix::Zero(0, nx + nu);
      dk[k] = Vector::Zero(0);
    }
    d.nh[k] = static_cast<int>(Ck[k].rows());
  }
  if (!lq.C_N.empty() && lq.C_N[0].rows() > 0) {
    Ck[N] = lq.C_N[0];
    dk[N] = -lq.d_N[0];
  } else {
    Ck[N] = Matrix::Zero(0, nx);
    dk[N] = Vector::Zero(0);
  }
  d.nh[N] = static_cast<int>(Ck[N].rows());
  ocp.dims = d;

  std::vector<Matrix> H(lq.H.begin(), lq.H.end() - 1);
  std::vector<Vector> q(lq.q.begin(), lq.q.end() - 1);
  ocp.stage_cost = std::make_shared<QuadraticFunction>(H, q);
  ocp.terminal_cost = std::make_shared<QuadraticFunction>(
      std::vector<Matrix>{lq.H[N]}, std::vector<Vector>{lq.q[N]});
  std::vector<Matrix> AB(N);
  for (int k = 0; k < N; ++k) {
    AB[k].resize(nx, nx + nu);
    AB[k] << lq.A[k], lq.B[k];
  }
  ocp.dynamics = std::make_shared<AffineFunction>(AB, lq.c);
  if (lq.input_bounds) {
    Matrix G = Matrix::Zero(2 * nu, nx + nu);
    G.block(0, nx, nu, nu).setIdentity();
    G.block(nu, nx, nu, nu) = -Matrix::Identity(nu, nu);
    Vector g(2 * nu);
    g << -lq.u_hi, lq.u_lo;
    ocp.input_constraint = std::make_shared<AffineFunction>(
        std::vector<Matrix>{G}, std::vector<Vector>{g});
  } else {
    ocp.input_constraint = std::make_shared<ZeroFunction>(0);
  }
  std::vector<Matrix> Cs(Ck.begin(), Ck.end() - 1);
  std::vector<Vector> ds(dk.begin(), dk.end() - 1);
  ocp.path_constraint = std::make_shared<AffineFunction>(Cs, ds);
  ocp.terminal_constraint = std::make_shared<AffineFunction>(
      std::vector<Matrix>{Ck[N]}, std::vector<Vector>{dk[N]});
  ocp.slack_penalty = std::make_shared<ZeroFunction>(1);
  ocp.terminal_slack_penalty = std::make_shared<ZeroFunction>(1);
  ocp.set_theta(Vector::Zero(0));
  return ocp;
}

}  // namespace diffmpc
