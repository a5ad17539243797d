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

// Primal-dual variables and their packed ordering.
//
// Packed layout, stage-major:
//
//   stage k < N : x_k | u_k | sigma_k | chi_k | nu_k | mu_k | t_nu_k | t_mu_k
//   terminal    : x_N | sigma_N | chi_N | mu_N | t_mu_N
//   action mode : zeta
//
// The KKT residual uses the same ordering row by row: the stationarity
// rows sit on x/u/sigma, chi_k holds the equality defect that defines it
// (x_0 - s, or f(x_{k-1}, u_{k-1}) - x_k), nu/mu hold g + t and h + t, the
// t blocks hold the complementarity rows and zeta holds u_0 - a.
//
// In action-value mode the input constraint rows of stage 0 are dropped:
// u_0 is pinned to a, so g(u_0) is a constant that the caller must satisfy.

#pragma once

#include <vector>

#include "diffmpc/ocp.hpp"

namespace diffmpc {

class Layout {
 public:
  Layout() = default;
  Layout(const Dims& dims, Mode mode);

  const Dims& dims() const { return dims_; }
  Mode mode() const { return mode_; }
  int N() const { return dims_.N; }
  int nx() const { return dims_.nx; }
  int nu() const { return dims_.nu; }
  int size() const { return size_; }

  int nz(int k) const { return dims_.nz(k); }
  int ns(int k) const { return dims_.ns[k]; }
  // Input constraint rows present at stage k (0 at k = 0 in action mode).
  int ng(int k) const;
  int nh(int k) const { return dims_.nh[k]; }
  // All inequality rows of stage k: g rows first, then h rows.
  int nc(int k) const { return k < N() ? ng(k) + nh(k) : nh(k); }
  // Leading entries of z_k that are pinned by equality rows (x_0, and u_0 in
  // action mode); the Riccati recursion treats them as the stage "state".
  int n_fixed(int k) const;

  int z(int k) const { return offsets_[k].z; }
  int x(int k) const { return offsets_[k].z; }
  int u(int k) const { return offsets_[k].z + dims_.nx; }
  int sigma(int k) const {
    return offsets_[k].z + dims_.nx + (k < N() ? dims_.nu : 0);
  }
  int chi(int k) const { return offsets_[k].chi; }
  int lam(int k) const { return offsets_[k].lam; }  // nu_k then mu_k
  int t(int k) const { return offsets_[k].t; }      // t_nu_k then t_mu_k
  int zeta() const { return zeta_; }
  bool has_zeta() const { return mode_ == Mode::kActionValue; }

  // Total number of inequality rows (= number of complementarity pairs).
  int n_inequalities() const { return n_ineq_; }

 private:
  struct Offsets {
    int z = 0, chi = 0, lam = 0, t = 0;
  };
  Dims dims_;
  Mode mode_ = Mode::kValue;
  std::vector<Offsets> offsets_;
  int zeta_ = 0;
  int size_ = 0;
  int n_ineq_ = 0;
};

struct PrimalDualPoint {
  Mode mode = Mode::kValue;
  std::vector<Vector> x;      // N+1
  std::vector<Vector> u;      // N
  std::vector<Vector> sigma;  // N+1
  std::vector<Vector> chi;    // N+1, chi_0 pairs with x_0 = s
  std::vector<Vector> nu;     // N, empty at k = 0 in action mode
  std::vector<Vector> mu;     // N+1, [N] terminal
  std::vector<Vector> t_nu;   // N
  std::vector<Vector> t_mu;   // N+1, [N] is t_muN
  Vector zeta;                // nu entries in action mode, empty otherwise

  // All-zero point with the shapes implied by dims and mode.
  static PrimalDualPoint zeros(const Dims& dims, Mode mode);
};

// Exact equality of mode, block shapes and entries.
bool same_point(const PrimalDualPoint& a, const PrimalDualPoint& b);

// Flat vector in Layout order.
struct PackedVector {
  Layout layout;
  Vector data;
};

PackedVector pack(const PrimalDualPoint& point, const Dims& dims);
// Throws DimensionError if v.size() differs from the layout size.
PrimalDualPoint unpack(const Vector& v, const Dims& dims, Mode mode);

// Checks every block against dims; throws DimensionError on mismatch.
void check_shape(const PrimalDualPoint& point, const Dims& dims);

// True if every multiplier and inequality slack is strictly positive.
bool strictly_interior(const PrimalDualPoint& point);

}  // namespace diffmpc
