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

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "diffmpc/agent.hpp"
#include "diffmpc/envs.hpp"
#include "diffmpc/models.hpp"
#include "oracles.hpp"

namespace diffmpc {
namespace {

using Eigen::Vector3d;

TEST(LtiEnv, RestWithoutDisturbanceStaysAtRest) {
  const LtiEnv env;
  const StepResult r = env.transition(Vector::Zero(2), Vector::Zero(1), 0.0);
  EXPECT_EQ(r.s_next, Vector::Zero(2));
  EXPECT_EQ(r.cost, 0.0);
  EXPECT_FALSE(r.violation);
}

TEST(LtiEnv, LargestDisturbanceViolatesLowerBound) {
  const LtiEnv env;
  const StepResult r = env.transition(Vector::Zero(2), Vector::Zero(1), -0.1);
  EXPECT_NEAR(r.s_next(0), -0.1, 1e-15);
  EXPECT_EQ(r.s_next(1), 0.0);
  EXPECT_TRUE(r.violation);
  // The default stage cost charges the current state, which is feasible.
  EXPECT_EQ(r.cost, 0.0);

  LtiEnv::Params p;
  p.penalize_successor = true;
  const StepResult rs =
      LtiEnv(p).transition(Vector::Zero(2), Vector::Zero(1), -0.1);
  EXPECT_NEAR(rs.cost, 100.0 * 0.1, 1e-12);
}

TEST(LtiEnv, CostChargesCurrentStateViolation) {
  const LtiEnv env;
  const Vector s = (Vector(2) << -0.2, 1.5).finished();
  const Vector a = Vector::Constant(1, 0.4);
  const StepResult r = env.transition(s, a, 0.0);
  const double expected = 0.5 * (s.squaredNorm() + 0.16) + 100.0 * 0.2 + 100.0 * 0.5;
  EXPECT_NEAR(r.cost, expected, 1e-12);
  Eigen::Matrix2d A{{0.9, 0.35}, {0.0, 1.1}};
  Eigen::Vector2d B{0.0813, 0.2};
  EXPECT_LE((r.s_next - (A * s + B * 0.4)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LtiEnv, InputsAreClippedBeforeUse) {
  const LtiEnv env;
  const Vector s = Vector::Constant(2, 0.3);
  const StepResult big = env.transition(s, Vector::Constant(1, 5.0), 0.0);
  const StepResult one = env.transition(s, Vector::Ones(1), 0.0);
  EXPECT_EQ(big.s_next, one.s_next);
  EXPECT_EQ(big.cost, one.cost);
}

TEST(LtiEnv, DisturbanceIsUniformOnItsInterval) {
  LtiEnv env;
  env.reset(Vector::Zero(2), 123);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double e = env.sample_disturbance();
    ASSERT_GE(e, -0.1);
    ASSERT_LE(e, 0.0);
    sum += e;
  }
  EXPECT_NEAR(sum / n, -0.05, 0.002);
}

TEST(LtiEnv, SameSeedReproducesStream) {
  LtiEnv env;
  std::vector<Vector> a, b;
  env.reset(Vector::Constant(2, 0.5), 77);
  for (int i = 0; i < 20; ++i) a.push_back(env.step(Vector::Constant(1, 0.1)).s_next);
  env.reset(Vector::Constant(2, 0.5), 77);
  for (int i = 0; i < 20; ++i) b.push_back(env.step(Vector::Constant(1, 0.1)).s_next);
  EXPECT_EQ(a, b);
}

TEST(LtiEnv, InitialPolicyViolatesConstraintsInFirstEpisode) {
  LtiEnv env;
  MpcAgent agent(make_lti_ocp(), SolverSettings{});
  Vector s = env.reset(Vector::Constant(2, 0.5), 0);
  int violations = 0;
  double penalty = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vector a = agent.act(s).a;
    const StepResult r = env.step(a);
    violations += r.violation;
    penalty += r.cost - 0.5 * (s.squaredNorm() + a.squaredNorm());
    s = r.s_next;
  }
  EXPECT_GT(violations, 0);
  EXPECT_GT(penalty, 0.0);
}

TEST(LtiEnv, PlantDiffersFromModel) {
  const LtiEnv env;
  const ParametricOcp ocp = make_lti_ocp();
  EXPECT_NE(env.params().A(0, 0), ocp.theta_slice("A")(0));
  EXPECT_NE(env.params().B(0), ocp.theta_slice("B")(0));
}

// Static force balance of the free masses, written out independently of the
// library's right-hand side.
Vector static_residual(const ChainMassParams& p, const Vector& q,
                       const Vector3d& end) {
  const int n = p.n_mass;
  auto pos = [&](int i) -> Vector3d {
    if (i == 0) return Vector3d::Zero();
    if (i == n - 1) return end;
    return q.segment(3 * (i - 1), 3);
  };
  auto link = [&](int i) -> Vector3d {  // force of link i on mass i
    const Vector3d d = pos(i + 1) - pos(i);
    return p.k[i].cwiseProduct(d) * (1.0 - p.l[i].norm() / d.norm());
  };
  Vector r(3 * (n - 2));
  for (int i = 1; i <= n - 2; ++i) {
    r.segment(3 * (i - 1), 3) = link(i) - link(i - 1) + p.mass[i] * p.gravity;
  }
  return r;
}

TEST(ChainMass, HangingEquilibriumHasZeroRhs) {
  for (int n : {3, 5}) {
    const ChainMassParams p = ChainMassParams::defaults(n);
    const Vector3d end = chain_mass_target_end(p);
    const int m = 3 * (n - 2);
    Vector q(m);
    for (int i = 1; i <= n - 2; ++i) q.segment(3 * (i - 1), 3) = end * i / (n - 1.0);
    for (int it = 0; it < 50; ++it) {
      const Vector r = static_residual(p, q, end);
      if (r.cwiseAbs().maxCoeff() < 1e-13) break;
      const Matrix J = oracle::central_jacobian(
          [&](const Vector& x) { return static_residual(p, x, end); }, q, 1e-7);
      q -= J.fullPivLu().solve(r);
    }
    ASSERT_LE(static_residual(p, q, end).cwiseAbs().maxCoeff(), 1e-11);
    Vector x = Vector::Zero(p.nx());
    x.head(m) = q;
    x.segment(m, 3) = end;
    EXPECT_LE(chain_mass_rhs(p, x, Vector::Zero(3)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((chain_mass_equilibrium(p, end) - x).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(ChainMass, UnstretchedWeightlessChainIsAtRest) {
  ChainMassParams p = ChainMassParams::defaults(4);
  p.gravity.setZero();
  Vector x = Vector::Zero(p.nx());
  Vector3d at = Vector3d::Zero();
  for (int i = 1; i < p.n_mass; ++i) {
    at += p.l[i - 1];
    x.segment(3 * (i - 1), 3) = at;
  }
  EXPECT_LE(chain_mass_rhs(p, x, Vector::Zero(3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ChainMass, Rk4ConservesEnergyOfUndampedOscillation) {
  ChainMassParams p = ChainMassParams::defaults(4);
  for (auto& k : p.k) k.setConstant(1.0);
  for (auto& d : p.d) d.setZero();
  p.dt = 1e-3;
  Vector x = chain_mass_equilibrium(p, chain_mass_target_end(p));
  x(0) += 0.01;
  x(4) -= 0.02;
  const Vector u = Vector::Zero(3);
  // Independent energy: kinetic + gravitational + isotropic spring energy.
  auto energy = [&](const Vector& s) {
    const int n = p.n_mass, vel = 3 * (n - 1);
    auto pos = [&](int i) -> Vector3d {
      return i == 0 ? Vector3d::Zero() : Vector3d(s.segment(3 * (i - 1), 3));
    };
    double e = 0.0;
    for (int i = 1; i < n - 1; ++i) {
      e += 0.5 * p.mass[i] * s.segment(vel + 3 * (i - 1), 3).squaredNorm();
    }
    for (int i = 1; i < n; ++i) e -= p.mass[i] * p.gravity.dot(pos(i));
    for (int i = 0; i < n - 1; ++i) {
      const double st = (pos(i + 1) - pos(i)).norm() - p.l[i].norm();
      e += 0.5 * p.k[i](0) * st * st;
    }
    return e;
  };
  const double e0 = energy(x);
  EXPECT_NEAR(chain_mass_energy(p, x, u), e0, 1e-14);
  for (int i = 0; i < 100; ++i) x = rk4_step(p, x, u);
  EXPECT_NEAR(energy(x), e0, 1e-6);
}

TEST(ChainMass, CoincidentMassesRaise) {
  const ChainMassParams p = ChainMassParams::defaults(3);
  const Vector x = Vector::Zero(p.nx());
  EXPECT_THROW(chain_mass_rhs(p, x, Vector::Zero(3)), SingularityError);
}

TEST(ChainMass, StateDimensionFollowsMassCount) {
  for (int n = 3; n <= 6; ++n) {
    EXPECT_EQ(ChainMassParams::defaults(n).nx(), 6 * (n - 1) - 3);
  }
}

TEST(ChainMass, EnvironmentStepEqualsModelDynamics) {
  const ChainMassParams p = ChainMassParams::defaults(4);
  const ChainMassProblem cm = make_chain_mass_ocp(p);
  ChainMassEnv env(p, cm.xref);
  env.reset(cm.x0, 0);
  const Vector a = (Vector(3) << 0.1, -0.2, 0.05).finished();
  const StepResult r = env.step(a);
  Vector z(p.nx() + 3);
  z << cm.x0, a;
  Vector f(p.nx());
  cm.ocp.dynamics->eval(0, z, cm.ocp.theta(), f);
  EXPECT_EQ(r.s_next, f);
}

}  // namespace
}  // namespace diffmpc
