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

#include "diffmpc/riccati.hpp"

#include <limits>

namespace diffmpc {

namespace {

std::atomic<long> g_factorizations{0};

}  // namespace

long riccati_factorization_count() { return g_factorizations.load(); }

RiccatiFactorization riccati_factorize(const KktSystem& sys,
                                       const std::vector<double>& shifts) {
  ++g_factorizations;
  const Layout& lay = sys.layout;
  const int N = lay.N();
  RiccatiFactorization fact;
  fact.layout_ = lay;
  fact.system_ = sys;
  fact.shifts_ = shifts;
  fact.stages_.resize(N + 1);
  for (int k = N; k >= 0; --k) {
    const KktStage& in = sys.stages[k];
    RiccatiFactorization::Stage& st = fact.stages_[k];
    const int nz = lay.nz(k);
    const int nf = lay.n_fixed(k);
    const int nv = nz - nf;
    st.Ht = in.H;
    if (!shifts.empty() && shifts[k] != 0.0) {
      st.Ht.diagonal().array() += shifts[k];
    }
    if (in.J.rows() > 0) {
      const Vector w = in.lam.cwiseQuotient(in.t);
      st.Ht.noalias() += in.J.transpose() * w.asDiagonal() * in.J;
    }
    st.J = in.J;
    st.lam = in.lam;
    st.t = in.t;
    Matrix G = st.Ht;
    if (k < N) {
      st.F = in.F;
      G.noalias() += st.F.transpose() * fact.stages_[k + 1].P * st.F;
    }
    if (!G.allFinite()) {
      throw FactorizationError(k, "stage " + std::to_string(k) +
                                      ": non-finite reduced Hessian");
    }
    if (nv > 0) {
      st.Rbar.compute(G.bottomRightCorner(nv, nv));
      if (st.Rbar.info() != Eigen::Success) {
        throw FactorizationError(
            k, "stage " + std::to_string(k) +
                   ": reduced Hessian is not positive definite");
      }
      st.K = -st.Rbar.solve(G.bottomLeftCorner(nv, nf));
      st.P = G.topLeftCorner(nf, nf) +
             G.bottomLeftCorner(nv, nf).transpose() * st.K;
    } else {
      st.K.resize(0, nf);
      st.P = G.topLeftCorner(nf, nf);
    }
    st.P = 0.5 * (st.P + st.P.transpose()).eval();
  }
  return fact;
}

Matrix RiccatiFactorization::apply(const Matrix& w) const {
  Matrix out = apply_kkt_matrix(system_, w);
  if (!shifts_.empty()) {
    for (int k = 0; k <= layout_.N(); ++k) {
      if (shifts_[k] == 0.0) continue;
      out.middleRows(layout_.z(k), layout_.nz(k)) +=
          shifts_[k] * w.middleRows(layout_.z(k), layout_.nz(k));
    }
  }
  return out;
}

namespace {

Matrix sweep(const RiccatiFactorization& fact, const Matrix& B) {
  const Layout& lay = fact.layout();
  const auto& st = fact.stages();
  const int N = lay.N();
  const int nx = lay.nx();
  const int nu = lay.nu();
  const int m = static_cast<int>(B.cols());
  Matrix X = Matrix::Zero(lay.size(), m);

  // Condensed linear terms q_k = -(b_S - J' T^-1 (b_C - Lam b_P)).
  std::vector<Matrix> q(N + 1), rc(N + 1);
  for (int k = 0; k <= N; ++k) {
    const int nc = lay.nc(k);
    q[k] = -B.middleRows(lay.z(k), lay.nz(k));
    if (nc > 0) {
      rc[k] = st[k].t.cwiseInverse().asDiagonal() *
              (B.middleRows(lay.t(k), nc) -
               st[k].lam.asDiagonal() * B.middleRows(lay.lam(k), nc));
      q[k].noalias() += st[k].J.transpose() * rc[k];
    }
  }

  // Backward sweep for the affine terms.
  std::vector<Matrix> kff(N + 1);
  Matrix p;
  for (int k = N; k >= 0; --k) {
    const int nf = lay.n_fixed(k);
    const int nv = lay.nz(k) - nf;
    Matrix g = q[k];
    if (k < N) {
      // c_k = -b_E,k+1
      const Matrix c = -B.middleRows(lay.chi(k + 1), nx);
      g.noalias() += st[k].F.transpose() * (st[k + 1].P * c + p);
    }
    if (nv > 0) {
      kff[k] = -st[k].Rbar.solve(g.bottomRows(nv));
      p = g.topRows(nf) + st[k].K.transpose() * g.bottomRows(nv);
    } else {
      kff[k].resize(0, m);
      p = g.topRows(nf);
    }
  }

  // Forward sweep for the primal steps.
  Matrix s(lay.n_fixed(0), m);
  s.topRows(nx) = B.middleRows(lay.chi(0), nx);
  if (lay.has_zeta()) s.bottomRows(nu) = B.middleRows(lay.zeta(), nu);
  for (int k = 0; k <= N; ++k) {
    const int nf = lay.n_fixed(k);
    const int nv = lay.nz(k) - nf;
    auto dz = X.middleRows(lay.z(k), lay.nz(k));
    dz.topRows(nf) = s;
    if (nv > 0) dz.bottomRows(nv) = st[k].K * s + kff[k];
    if (k < N) {
      s = st[k].F * dz - B.middleRows(lay.chi(k + 1), nx);
    }
  }

  // Equality multipliers from the pinned rows of the stationarity blocks.
  Matrix chi_next;
  for (int k = N; k >= 0; --k) {
    const auto dz = X.middleRows(lay.z(k), lay.nz(k));
    Matrix grad = st[k].Ht * dz + q[k];
    if (k < N) grad.noalias() += st[k].F.transpose() * chi_next;
    if (k > 0) {
      chi_next = grad.topRows(nx);
    } else {
      chi_next = -grad.topRows(nx);
      if (lay.has_zeta()) {
        X.middleRows(lay.zeta(), nu) = -grad.middleRows(nx, nu);
      }
    }
    X.middleRows(lay.chi(k), nx) = chi_next;
  }

  // Inequality multipliers and slacks.
  for (int k = 0; k <= N; ++k) {
    const int nc = lay.nc(k);
    if (nc == 0) continue;
    const Matrix Jdz = st[k].J * X.middleRows(lay.z(k), lay.nz(k));
    X.middleRows(lay.t(k), nc) = B.middleRows(lay.lam(k), nc) - Jdz;
    X.middleRows(lay.lam(k), nc) =
        rc[k] + st[k].lam.cwiseQuotient(st[k].t).asDiagonal() * Jdz;
  }
  return X;
}

}  // namespace

Matrix riccati_backsolve(const RiccatiFactorization& fact, const Matrix& B) {
  const Layout& lay = fact.layout();
  if (B.rows() != lay.size()) {
    throw DimensionError("right-hand side has " + std::to_string(B.rows()) +
                         " rows, layout expects " + std::to_string(lay.size()));
  }
  Matrix X = sweep(fact, B);
  const double b_norm = B.cwiseAbs().maxCoeff();
  double last = std::numeric_limits<double>::infinity();
  for (int it = 0; it < kRefinementSteps; ++it) {
    const Matrix R = B - fact.apply(X);
    const double r_norm = R.cwiseAbs().maxCoeff();
    // Stop at rounding level or once refinement stops paying off.
    if (!(r_norm > 1e-15 * b_norm) || !(r_norm < 0.5 * last)) break;
    last = r_norm;
    X += sweep(fact, R);
  }
  return X;
}

Vector riccati_backsolve(const RiccatiFactorization& fact, const Vector& rhs) {
  Matrix X = riccati_backsolve(fact, Matrix(rhs));
  return X.col(0);
}

PackedVector riccati_backsolve(const RiccatiFactorization& fact,
                               const PackedVector& rhs) {
  return {fact.layout(), riccati_backsolve(fact, rhs.data)};
}

}  // namespace diffmpc
