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

#include "diffmpc/envs.hpp"

#include <algorithm>

namespace diffmpc {

LtiEnv::LtiEnv(Params params) : p_(std::move(params)) {
  if (!(p_.disturbance_lower <= p_.disturbance_upper)) {
    throw PreconditionError("disturbance bounds are inverted");
  }
}

Vector LtiEnv::reset(const Vector& s0, std::uint64_t seed) {
  if (s0.size() != 2) throw DimensionError("LTI state has 2 entries");
  s_ = s0;
  rng_.seed(seed);
  return s_;
}

double LtiEnv::sample_disturbance() {
  std::uniform_real_distribution<double> dist(p_.disturbance_lower,
                                              p_.disturbance_upper);
  return p_.disturbance_lower == p_.disturbance_upper ? p_.disturbance_lower
                                                      : dist(rng_);
}

StepResult LtiEnv::transition(const Vector& s, const Vector& a,
                              double e) const {
  if (s.size() != 2 || a.size() != 1) {
    throw DimensionError("LTI transition expects s in R^2 and a in R^1");
  }
  const double u = std::clamp(a[0], p_.u_min, p_.u_max);
  StepResult r;
  Eigen::Vector2d next = p_.A * s + p_.B * u;
  next[0] += e;
  r.s_next = next;
  const auto excess = [&](const Eigen::Vector2d& x) {
    return Eigen::Vector2d((p_.lb - x).cwiseMax(x - p_.ub).cwiseMax(0.0));
  };
  const Eigen::Vector2d next_viol = excess(next);
  const Eigen::Vector2d viol =
      p_.penalize_successor ? next_viol : excess(Eigen::Vector2d(s));
  r.cost = 0.5 * (s.squaredNorm() + u * u) + p_.w.dot(viol);
  r.violation = next_viol.maxCoeff() > 0.0;
  return r;
}

StepResult LtiEnv::step(const Vector& a) {
  StepResult r = transition(s_, a, sample_disturbance());
  s_ = r.s_next;
  return r;
}

ChainMassParams ChainMassParams::defaults(int n_mass) {
  if (n_mass < 3) throw PreconditionError("chain mass needs at least 3 masses");
  ChainMassParams p;
  p.n_mass = n_mass;
  p.mass.assign(n_mass, 0.033);
  // Slightly different stiffness per axis and link.
  for (int i = 0; i < n_mass - 1; ++i) {
    p.k.push_back(Eigen::Vector3d(1.0, 1.0 + 0.05 * (i % 3), 1.0 - 0.03 * (i % 2)));
    p.d.push_back(Eigen::Vector3d::Constant(0.1));
    p.l.push_back(Eigen::Vector3d(0.033, 0.0, 0.0));
  }
  return p;
}

void ChainMassParams::check() const {
  if (n_mass < 3) throw DimensionError("chain mass needs at least 3 masses");
  const size_t links = n_mass - 1;
  if (mass.size() != static_cast<size_t>(n_mass) || k.size() != links ||
      d.size() != links || l.size() != links) {
    throw DimensionError("chain mass parameters do not match n_mass");
  }
  if (!(dt > 0.0) || rk4_substeps < 1) {
    throw PreconditionError("chain mass integrator settings are invalid");
  }
}

Vector chain_mass_rhs(const ChainMassParams& p, const Vector& x,
                      const Vector& u) {
  if (x.size() != p.nx() || u.size() != 3) {
    throw DimensionError("chain mass rhs: wrong state or input size");
  }
  Vector dx(p.nx());
  chain_mass_rhs(p, x.data(), u.data(), dx.data());
  return dx;
}

Vector rk4_step(const ChainMassParams& p, const Vector& x, const Vector& u) {
  if (x.size() != p.nx() || u.size() != 3) {
    throw DimensionError("rk4_step: wrong state or input size");
  }
  Vector out(p.nx());
  rk4_step(p, x.data(), u.data(), out.data());
  return out;
}

Vector chain_mass_equilibrium(const ChainMassParams& p,
                              const Eigen::Vector3d& end, double tol) {
  p.check();
  const int n = p.n_mass;
  const int nfree = n - 2;  // masses with velocity states
  const int m = 3 * nfree;
  // Unknowns: positions of masses 1..n-2; the last mass sits at `end`.
  Vector q(m);
  for (int i = 1; i <= nfree; ++i) {
    q.segment(3 * (i - 1), 3) = end * (double(i) / (n - 1));
  }
  auto state = [&](const Vector& pos) {
    Vector x = Vector::Zero(p.nx());
    x.head(m) = pos;
    x.segment(m, 3) = end;
    return x;
  };
  const Vector u = Vector::Zero(3);
  auto accel = [&](const Vector& pos) {
    Vector dx = chain_mass_rhs(p, state(pos), u);
    return Vector(dx.tail(m));
  };
  using D = Dual<double>;
  for (int it = 0; it < 100; ++it) {
    const Vector r = accel(q);
    if (r.cwiseAbs().maxCoeff() <= tol) return state(q);
    // Jacobian of the accelerations by forward-mode differentiation.
    Matrix J(m, m);
    std::vector<D> x(p.nx()), ud(3, D(0.0)), dx(p.nx());
    const Vector xs = state(q);
    for (int i = 0; i < p.nx(); ++i) x[i] = D(xs[i]);
    for (int j = 0; j < m; ++j) {
      x[j].d = 1.0;
      chain_mass_rhs(p, x.data(), ud.data(), dx.data());
      for (int i = 0; i < m; ++i) J(i, j) = dx[p.nx() - m + i].d;
      x[j].d = 0.0;
    }
    const Vector step = J.fullPivLu().solve(-r);
    // Damped Newton on |r|.
    double alpha = 1.0;
    const double r0 = r.norm();
    for (int h = 0; h < 30; ++h, alpha *= 0.5) {
      try {
        if (accel(q + alpha * step).norm() < r0) break;
      } catch (const SingularityError&) {
      }
    }
    q += alpha * step;
  }
  const Vector r = accel(q);
  if (r.cwiseAbs().maxCoeff() > std::max(tol, 1e-8)) {
    throw SolverError("chain mass equilibrium: Newton iteration stalled");
  }
  return state(q);
}

double chain_mass_energy(const ChainMassParams& p, const Vector& x,
                         const Vector& u) {
  const int n = p.n_mass;
  const int vel = 3 * (n - 1);
  for (const auto& k : p.k) {
    if (k.maxCoeff() != k.minCoeff()) {
      throw PreconditionError("energy needs isotropic stiffness");
    }
  }
  auto pos = [&](int i) -> Eigen::Vector3d {
    return i == 0 ? Eigen::Vector3d::Zero()
                  : Eigen::Vector3d(x.segment(3 * (i - 1), 3));
  };
  double e = 0.0;
  for (int i = 1; i < n; ++i) {
    Eigen::Vector3d v = i == n - 1 ? Eigen::Vector3d(u)
                                   : Eigen::Vector3d(x.segment(vel + 3 * (i - 1), 3));
    e += 0.5 * p.mass[i] * v.squaredNorm() - p.mass[i] * p.gravity.dot(pos(i));
  }
  for (int i = 0; i < n - 1; ++i) {
    const double stretch = (pos(i + 1) - pos(i)).norm() - p.l[i].norm();
    e += 0.5 * p.k[i][0] * stretch * stretch;
  }
  return e;
}

ChainMassEnv::ChainMassEnv(ChainMassParams params, Vector xref)
    : p_(std::move(params)), xref_(std::move(xref)) {
  p_.check();
  if (xref_.size() != p_.nx()) throw DimensionError("xref has wrong size");
  s_ = xref_;
}

Vector ChainMassEnv::reset(const Vector& s0, std::uint64_t) {
  if (s0.size() != p_.nx()) throw DimensionError("chain mass state size");
  s_ = s0;
  return s_;
}

StepResult ChainMassEnv::step(const Vector& a) {
  StepResult r;
  r.s_next = rk4_step(p_, s_, a);
  r.cost = 0.5 * ((s_ - xref_).squaredNorm() + a.squaredNorm());
  s_ = r.s_next;
  return r;
}

}  // namespace diffmpc
