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

#include "diffmpc/primal_dual.hpp"

namespace diffmpc {

Layout::Layout(const Dims& dims, Mode mode) : dims_(dims), mode_(mode) {
  auto problems = dims.check();
  if (!problems.empty()) throw DimensionError("invalid dims: " + problems[0]);
  const int N = dims.N;
  offsets_.resize(N + 1);
  int off = 0;
  for (int k = 0; k <= N; ++k) {
    Offsets& o = offsets_[k];
    o.z = off;
    off += dims.nz(k);
    o.chi = off;
    off += dims.nx;
    o.lam = off;
    off += nc(k);
    o.t = off;
    off += nc(k);
    n_ineq_ += nc(k);
  }
  zeta_ = off;
  if (has_zeta()) off += dims.nu;
  size_ = off;
}

int Layout::ng(int k) const {
  if (k >= N()) return 0;
  if (k == 0 && mode_ == Mode::kActionValue) return 0;
  return dims_.ng[k];
}

int Layout::n_fixed(int k) const {
  if (k == 0 && mode_ == Mode::kActionValue) return dims_.nx + dims_.nu;
  return dims_.nx;
}

PrimalDualPoint PrimalDualPoint::zeros(const Dims& dims, Mode mode) {
  Layout lay(dims, mode);
  const int N = dims.N;
  PrimalDualPoint p;
  p.mode = mode;
  for (int k = 0; k <= N; ++k) {
    p.x.push_back(Vector::Zero(dims.nx));
    p.sigma.push_back(Vector::Zero(dims.ns[k]));
    p.chi.push_back(Vector::Zero(dims.nx));
    p.mu.push_back(Vector::Zero(dims.nh[k]));
    p.t_mu.push_back(Vector::Zero(dims.nh[k]));
    if (k < N) {
      p.u.push_back(Vector::Zero(dims.nu));
      p.nu.push_back(Vector::Zero(lay.ng(k)));
      p.t_nu.push_back(Vector::Zero(lay.ng(k)));
    }
  }
  p.zeta = Vector::Zero(mode == Mode::kActionValue ? dims.nu : 0);
  return p;
}

void check_shape(const PrimalDualPoint& p, const Dims& dims) {
  Layout lay(dims, p.mode);
  const int N = dims.N;
  auto fail = [](const std::string& what) {
    throw DimensionError("primal-dual point: " + what);
  };
  auto count = [&](const std::vector<Vector>& v, int n, const char* name) {
    if (static_cast<int>(v.size()) != n) {
      fail(std::string(name) + " has " + std::to_string(v.size()) +
           " stages, expected " + std::to_string(n));
    }
  };
  count(p.x, N + 1, "x");
  count(p.u, N, "u");
  count(p.sigma, N + 1, "sigma");
  count(p.chi, N + 1, "chi");
  count(p.nu, N, "nu");
  count(p.mu, N + 1, "mu");
  count(p.t_nu, N, "t_nu");
  count(p.t_mu, N + 1, "t_mu");
  auto size = [&](const Vector& v, int n, const char* name, int k) {
    if (v.size() != n) {
      fail(std::string(name) + "[" + std::to_string(k) + "] has " +
           std::to_string(v.size()) + " entries, expected " +
           std::to_string(n));
    }
  };
  for (int k = 0; k <= N; ++k) {
    size(p.x[k], dims.nx, "x", k);
    size(p.sigma[k], dims.ns[k], "sigma", k);
    size(p.chi[k], dims.nx, "chi", k);
    size(p.mu[k], dims.nh[k], "mu", k);
    size(p.t_mu[k], dims.nh[k], "t_mu", k);
    if (k < N) {
      size(p.u[k], dims.nu, "u", k);
      size(p.nu[k], lay.ng(k), "nu", k);
      size(p.t_nu[k], lay.ng(k), "t_nu", k);
    }
  }
  if (p.zeta.size() != (lay.has_zeta() ? dims.nu : 0)) fail("zeta size");
}

PackedVector pack(const PrimalDualPoint& p, const Dims& dims) {
  check_shape(p, dims);
  Layout lay(dims, p.mode);
  Vector v(lay.size());
  const int N = dims.N;
  for (int k = 0; k <= N; ++k) {
    v.segment(lay.x(k), dims.nx) = p.x[k];
    if (k < N) v.segment(lay.u(k), dims.nu) = p.u[k];
    v.segment(lay.sigma(k), dims.ns[k]) = p.sigma[k];
    v.segment(lay.chi(k), dims.nx) = p.chi[k];
    const int ng = lay.ng(k);
    const int nh = dims.nh[k];
    if (k < N) {
      v.segment(lay.lam(k), ng) = p.nu[k];
      v.segment(lay.t(k), ng) = p.t_nu[k];
    }
    v.segment(lay.lam(k) + ng, nh) = p.mu[k];
    v.segment(lay.t(k) + ng, nh) = p.t_mu[k];
  }
  if (lay.has_zeta()) v.segment(lay.zeta(), dims.nu) = p.zeta;
  return {lay, v};
}

PrimalDualPoint unpack(const Vector& v, const Dims& dims, Mode mode) {
  Layout lay(dims, mode);
  if (v.size() != lay.size()) {
    throw DimensionError("packed vector has " + std::to_string(v.size()) +
                         " entries, layout expects " +
                         std::to_string(lay.size()));
  }
  PrimalDualPoint p = PrimalDualPoint::zeros(dims, mode);
  const int N = dims.N;
  for (int k = 0; k <= N; ++k) {
    p.x[k] = v.segment(lay.x(k), dims.nx);
    if (k < N) p.u[k] = v.segment(lay.u(k), dims.nu);
    p.sigma[k] = v.segment(lay.sigma(k), dims.ns[k]);
    p.chi[k] = v.segment(lay.chi(k), dims.nx);
    const int ng = lay.ng(k);
    const int nh = dims.nh[k];
    if (k < N) {
      p.nu[k] = v.segment(lay.lam(k), ng);
      p.t_nu[k] = v.segment(lay.t(k), ng);
    }
    p.mu[k] = v.segment(lay.lam(k) + ng, nh);
    p.t_mu[k] = v.segment(lay.t(k) + ng, nh);
  }
  if (lay.has_zeta()) p.zeta = v.segment(lay.zeta(), dims.nu);
  return p;
}

bool strictly_interior(const PrimalDualPoint& p) {
  auto pos = [](const std::vector<Vector>& vs) {
    for (const auto& v : vs) {
      if (v.size() > 0 && !(v.minCoeff() > 0.0)) return false;
    }
    return true;
  };
  return pos(p.nu) && pos(p.mu) && pos(p.t_nu) && pos(p.t_mu);
}

bool same_point(const PrimalDualPoint& a, const PrimalDualPoint& b) {
  if (a.mode != b.mode) return false;
  auto eq = [](const Vector& x, const Vector& y) {
    return x.size() == y.size() && (x.size() == 0 || x == y);
  };
  auto eqs = [&](const std::vector<Vector>& x, const std::vector<Vector>& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i) {
      if (!eq(x[i], y[i])) return false;
    }
    return true;
  };
  return eqs(a.x, b.x) && eqs(a.u, b.u) && eqs(a.sigma, b.sigma) &&
         eqs(a.chi, b.chi) && eqs(a.nu, b.nu) && eqs(a.mu, b.mu) &&
         eqs(a.t_nu, b.t_nu) && eqs(a.t_mu, b.t_mu) && eq(a.zeta, b.zeta);
}

}  // namespace diffmpc
