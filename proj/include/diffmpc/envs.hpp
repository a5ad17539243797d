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

// Simulated plants: a disturbed linear system and a chain of masses.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "diffmpc/autodiff.hpp"
#include "diffmpc/errors.hpp"
#include "diffmpc/stage_function.hpp"

namespace diffmpc {

struct StepResult {
  Vector s_next;
  double cost = 0.0;
  bool violation = false;  // s_next outside the state bounds
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  // Sets the state and reseeds the disturbance stream.
  virtual Vector reset(const Vector& s0, std::uint64_t seed) = 0;
  virtual StepResult step(const Vector& a) = 0;
  virtual const Vector& state() const = 0;
};

// x+ = A x + B clip(a) + [e; 0], e ~ U[lower, upper].
//
// Stage cost: 0.5 (|s|^2 + |a|^2) + w' max(0, lb - s, s - ub), where a is
// the applied (clipped) action. With penalize_successor the bound penalty is
// taken on s+ instead of s. The violation flag always refers to s+.
class LtiEnv final : public Environment {
 public:
  struct Params {
    Eigen::Matrix2d A{{0.9, 0.35}, {0.0, 1.1}};
    Eigen::Vector2d B{0.0813, 0.2};
    double disturbance_lower = -0.1;
    double disturbance_upper = 0.0;
    Eigen::Vector2d lb{0.0, -1.0};
    Eigen::Vector2d ub{1.0, 1.0};
    Eigen::Vector2d w{100.0, 100.0};
    double u_min = -1.0;
    double u_max = 1.0;
    bool penalize_successor = false;
  };

  LtiEnv() : LtiEnv(Params{}) {}
  explicit LtiEnv(Params params);

  int state_dim() const override { return 2; }
  int action_dim() const override { return 1; }
  Vector reset(const Vector& s0, std::uint64_t seed) override;
  StepResult step(const Vector& a) override;
  const Vector& state() const override { return s_; }
  const Params& params() const { return p_; }

  // Deterministic transition with an explicit disturbance sample.
  StepResult transition(const Vector& s, const Vector& a, double e) const;
  double sample_disturbance();

 private:
  Params p_;
  Vector s_ = Vector::Zero(2);
  std::mt19937_64 rng_;
};

// Chain of n_mass point masses linked by springs and dampers. Mass 0 is
// fixed at the origin, the last mass is velocity-controlled.
//
// State: positions of masses 1..n-1, then velocities of masses 1..n-2
// (dimension 6 n - 9). Input: velocity of mass n-1.
struct ChainMassParams {
  int n_mass = 5;
  std::vector<double> mass;            // n_mass entries, [0] unused
  std::vector<Eigen::Vector3d> k;      // per link, n_mass - 1
  std::vector<Eigen::Vector3d> d;      // per link
  std::vector<Eigen::Vector3d> l;      // rest-length vectors, per link
  Eigen::Vector3d gravity{0.0, 0.0, -9.81};
  double dt = 0.1;
  int rk4_substeps = 1;

  static ChainMassParams defaults(int n_mass);
  int nx() const { return 6 * n_mass - 9; }
  int nu() const { return 3; }
  // Throws DimensionError if per-link data does not match n_mass.
  void check() const;
};

// Continuous-time right-hand side, written once for double and dual types.
// Throws SingularityError if two neighbouring masses coincide.
template <class T>
void chain_mass_rhs(const ChainMassParams& p, const T* x, const T* u, T* dx) {
  using std::sqrt;
  const int n = p.n_mass;
  const int nfree = n - 1;
  const int vel = 3 * nfree;
  auto pos = [&](int i, int c) -> T { return i == 0 ? T(0.0) : x[3 * (i - 1) + c]; };
  auto velo = [&](int i, int c) -> T {
    if (i == 0) return T(0.0);
    if (i == n - 1) return u[c];
    return x[vel + 3 * (i - 1) + c];
  };
  // Link forces, F[i] acts on mass i (+) and mass i+1 (-).
  std::vector<T> F(3 * (n - 1));
  for (int i = 0; i < n - 1; ++i) {
    T dx3[3];
    T sq = T(0.0);
    for (int c = 0; c < 3; ++c) {
      dx3[c] = pos(i + 1, c) - pos(i, c);
      sq += dx3[c] * dx3[c];
    }
    if (!(primal(sq) >= 1e-18)) {
      throw SingularityError(0.0, "chain mass: masses " + std::to_string(i) +
                                      " and " + std::to_string(i + 1) +
                                      " coincide");
    }
    const T dist = sqrt(sq);
    const T scale = 1.0 - p.l[i].norm() / dist;
    for (int c = 0; c < 3; ++c) {
      F[3 * i + c] = p.k[i][c] * dx3[c] * scale +
                     p.d[i][c] * (velo(i + 1, c) - velo(i, c));
    }
  }
  for (int i = 1; i < n; ++i) {
    for (int c = 0; c < 3; ++c) dx[3 * (i - 1) + c] = velo(i, c);
  }
  for (int i = 1; i < n - 1; ++i) {
    for (int c = 0; c < 3; ++c) {
      dx[vel + 3 * (i - 1) + c] =
          (F[3 * i + c] - F[3 * (i - 1) + c]) / p.mass[i] + p.gravity[c];
    }
  }
}

template <class T>
void rk4_step(const ChainMassParams& p, const T* x, const T* u, T* out) {
  const int nx = p.nx();
  const double h = p.dt / p.rk4_substeps;
  std::vector<T> xs(x, x + nx), k1(nx), k2(nx), k3(nx), k4(nx), tmp(nx);
  for (int s = 0; s < p.rk4_substeps; ++s) {
    chain_mass_rhs(p, xs.data(), u, k1.data());
    for (int i = 0; i < nx; ++i) tmp[i] = xs[i] + 0.5 * h * k1[i];
    chain_mass_rhs(p, tmp.data(), u, k2.data());
    for (int i = 0; i < nx; ++i) tmp[i] = xs[i] + 0.5 * h * k2[i];
    chain_mass_rhs(p, tmp.data(), u, k3.data());
    for (int i = 0; i < nx; ++i) tmp[i] = xs[i] + h * k3[i];
    chain_mass_rhs(p, tmp.data(), u, k4.data());
    for (int i = 0; i < nx; ++i) {
      xs[i] = xs[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  }
  for (int i = 0; i < nx; ++i) out[i] = xs[i];
}

Vector chain_mass_rhs(const ChainMassParams& p, const Vector& x,
                      const Vector& u);
Vector rk4_step(const ChainMassParams& p, const Vector& x, const Vector& u);

// Rest configuration with the last mass held at `end`: solves rhs = 0 for
// the free positions (velocities zero) by damped Newton iteration.
Vector chain_mass_equilibrium(const ChainMassParams& p,
                              const Eigen::Vector3d& end, double tol = 1e-12);

// Kinetic plus spring plus gravitational energy. Requires isotropic
// stiffness; the controlled mass contributes kinetic energy |u|^2 m / 2.
double chain_mass_energy(const ChainMassParams& p, const Vector& x,
                         const Vector& u);

// Plant wrapper around rk4_step with a tracking cost
// 0.5 |x - xref|^2 + 0.5 |u|^2. There is no disturbance.
class ChainMassEnv final : public Environment {
 public:
  ChainMassEnv(ChainMassParams params, Vector xref);
  int state_dim() const override { return p_.nx(); }
  int action_dim() const override { return 3; }
  Vector reset(const Vector& s0, std::uint64_t seed) override;
  StepResult step(const Vector& a) override;
  const Vector& state() const override { return s_; }
  const ChainMassParams& params() const { return p_; }

 private:
  ChainMassParams p_;
  Vector xref_;
  Vector s_;
};

}  // namespace diffmpc
