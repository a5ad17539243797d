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

#include "diffmpc/kkt.hpp"

namespace diffmpc {

namespace {

void require_action(const Layout& lay, const std::optional<Vector>& a) {
  if (lay.has_zeta()) {
    if (!a) throw PreconditionError("action-value mode needs an action a");
    if (a->size() != lay.nu()) {
      throw DimensionError("action has " + std::to_string(a->size()) +
                           " entries, expected " + std::to_string(lay.nu()));
    }
  }
}

void add_scalar(const StageFunction& fn, int k, const Vector& z,
                const Vector& theta, StageEval& ev) {
  Matrix jac(1, z.size());
  ev.cost += fn.eval_scalar(k, z, theta);
  fn.jacobian(k, z, theta, jac);
  ev.cost_grad += jac.row(0).transpose();
}

void require_second_derivatives(const ParametricOcp& ocp) {
  const StageFunctionPtr* fns[] = {
      &ocp.stage_cost,       &ocp.slack_penalty,
      &ocp.dynamics,         &ocp.input_constraint,
      &ocp.path_constraint,  &ocp.terminal_cost,
      &ocp.terminal_slack_penalty, &ocp.terminal_constraint};
  for (const auto* fn : fns) {
    if (*fn && !(*fn)->has_second_derivatives()) {
      throw CapabilityError(
          "a callback provides no second derivatives; wrap the model with "
          "AutoDiffFunction (make_autodiff) to obtain them");
    }
  }
}

}  // namespace

Linearization linearize(const ParametricOcp& ocp, const Layout& lay,
                        const Vector& y, std::optional<HessianMode> hessian) {
  if (y.size() != lay.size()) {
    throw DimensionError("packed point has wrong length");
  }
  const Vector& theta = ocp.theta();
  const int N = lay.N();
  const int nx = lay.nx();
  Linearization lin;
  lin.layout = lay;
  lin.stages.resize(N + 1);
  for (int k = 0; k <= N; ++k) {
    StageEval& ev = lin.stages[k];
    const int nz = lay.nz(k);
    ev.z = y.segment(lay.z(k), nz);
    ev.cost_grad = Vector::Zero(nz);
    const int ng = lay.ng(k);
    const int nh = lay.nh(k);
    const int nc = ng + nh;
    ev.con.resize(nc);
    ev.con_jac.resize(nc, nz);
    if (k < N) {
      add_scalar(*ocp.stage_cost, k, ev.z, theta, ev);
      add_scalar(*ocp.slack_penalty, k, ev.z, theta, ev);
      ev.dyn.resize(nx);
      ev.dyn_jac.resize(nx, nz);
      ocp.dynamics->eval(k, ev.z, theta, ev.dyn);
      ocp.dynamics->jacobian(k, ev.z, theta, ev.dyn_jac);
      if (ng > 0) {
        ocp.input_constraint->eval(k, ev.z, theta, ev.con.head(ng));
        ocp.input_constraint->jacobian(k, ev.z, theta, ev.con_jac.topRows(ng));
      }
      if (nh > 0) {
        ocp.path_constraint->eval(k, ev.z, theta, ev.con.tail(nh));
        ocp.path_constraint->jacobian(k, ev.z, theta,
                                      ev.con_jac.bottomRows(nh));
      }
    } else {
      add_scalar(*ocp.terminal_cost, k, ev.z, theta, ev);
      add_scalar(*ocp.terminal_slack_penalty, k, ev.z, theta, ev);
      if (nh > 0) {
        ocp.terminal_constraint->eval(k, ev.z, theta, ev.con);
        ocp.terminal_constraint->jacobian(k, ev.z, theta, ev.con_jac);
      }
    }
    lin.objective += ev.cost;
  }
  if (hessian) compute_hessians(ocp, lin, y, *hessian);
  return lin;
}

void compute_hessians(const ParametricOcp& ocp, Linearization& lin,
                      const Vector& y, HessianMode mode) {
  const Layout& lay = lin.layout;
  const Vector& theta = ocp.theta();
  const int N = lay.N();
  const int nx = lay.nx();
  lin.hessians.resize(N + 1);
  const Vector one = Vector::Ones(1);
  const bool exact = mode != HessianMode::kGaussNewton;
  for (int k = 0; k <= N; ++k) {
    const StageEval& ev = lin.stages[k];
    const int nz = lay.nz(k);
    const int ng = lay.ng(k);
    const int nh = lay.nh(k);
    const int nc = ng + nh;
    Matrix& H = lin.hessians[k];
    H = Matrix::Zero(nz, nz);
    if (k < N) {
      ocp.stage_cost->add_weighted_hessian(k, ev.z, theta, one, H);
      ocp.slack_penalty->add_weighted_hessian(k, ev.z, theta, one, H);
      if (exact) {
        const Vector chi_next = y.segment(lay.chi(k + 1), nx);
        ocp.dynamics->add_weighted_hessian(k, ev.z, theta, chi_next, H);
        const Vector lam = y.segment(lay.lam(k), nc);
        if (ng > 0) {
          ocp.input_constraint->add_weighted_hessian(k, ev.z, theta,
                                                     lam.head(ng), H);
        }
        if (nh > 0) {
          ocp.path_constraint->add_weighted_hessian(k, ev.z, theta,
                                                    lam.tail(nh), H);
        }
      }
    } else {
      ocp.terminal_cost->add_weighted_hessian(k, ev.z, theta, one, H);
      ocp.terminal_slack_penalty->add_weighted_hessian(k, ev.z, theta, one, H);
      if (exact && nh > 0) {
        const Vector lam = y.segment(lay.lam(k), nc);
        ocp.terminal_constraint->add_weighted_hessian(k, ev.z, theta, lam, H);
      }
    }
  }
}

Vector kkt_residual_from(const Linearization& lin, const Vector& duals,
                         const Vector* dz, const Vector& s,
                         const std::optional<Vector>& a, double tau) {
  const Layout& lay = lin.layout;
  require_action(lay, a);
  const int N = lay.N();
  const int nx = lay.nx();
  const int nu = lay.nu();
  if (dz && lin.hessians.empty()) {
    throw PreconditionError("QP residual needs stage Hessians");
  }
  Vector r = Vector::Zero(lay.size());
  for (int k = 0; k <= N; ++k) {
    const StageEval& ev = lin.stages[k];
    const int nz = lay.nz(k);
    const int nc = lay.nc(k);
    const auto lam = duals.segment(lay.lam(k), nc);
    const auto t = duals.segment(lay.t(k), nc);

    auto stat = r.segment(lay.z(k), nz);
    stat = ev.cost_grad;
    if (dz) stat.noalias() += lin.hessians[k] * dz->segment(lay.z(k), nz);
    if (k < N) {
      stat.noalias() +=
          ev.dyn_jac.transpose() * duals.segment(lay.chi(k + 1), nx);
    }
    if (nc > 0) stat.noalias() += ev.con_jac.transpose() * lam;
    if (k == 0) {
      stat.head(nx) += duals.segment(lay.chi(0), nx);
      if (lay.has_zeta()) stat.segment(nx, nu) += duals.segment(lay.zeta(), nu);
    } else {
      stat.head(nx) -= duals.segment(lay.chi(k), nx);
    }

    Vector xk = ev.z.head(nx);
    if (dz) xk += dz->segment(lay.x(k), nx);
    auto eq = r.segment(lay.chi(k), nx);
    if (k == 0) {
      eq = xk - s;
    } else {
      const StageEval& prev = lin.stages[k - 1];
      eq = prev.dyn - xk;
      if (dz) {
        eq.noalias() += prev.dyn_jac * dz->segment(lay.z(k - 1), lay.nz(k - 1));
      }
    }

    if (nc > 0) {
      auto prim = r.segment(lay.lam(k), nc);
      prim = ev.con + t;
      if (dz) prim.noalias() += ev.con_jac * dz->segment(lay.z(k), nz);
      r.segment(lay.t(k), nc) =
          (lam.array() * t.array() - tau).matrix();
    }
  }
  if (lay.has_zeta()) {
    Vector u0 = lin.stages[0].z.segment(nx, nu);
    if (dz) u0 += dz->segment(lay.u(0), nu);
    r.segment(lay.zeta(), nu) = u0 - *a;
  }
  return r;
}

PackedVector kkt_residual(const ParametricOcp& ocp, const Vector& s,
                          const std::optional<Vector>& a,
                          const PrimalDualPoint& point, double tau) {
  PackedVector y = pack(point, ocp.dims);
  if (!strictly_interior(point)) {
    throw DomainError("KKT residual needs a strictly interior point");
  }
  if (s.size() != ocp.dims.nx) throw DimensionError("state s has wrong size");
  Linearization lin = linearize(ocp, y.layout, y.data);
  return {y.layout, kkt_residual_from(lin, y.data, nullptr, s, a, tau)};
}

double lagrangian(const ParametricOcp& ocp, const Vector& s,
                  const std::optional<Vector>& a, const PrimalDualPoint& point) {
  PackedVector y = pack(point, ocp.dims);
  const Layout& lay = y.layout;
  require_action(lay, a);
  Linearization lin = linearize(ocp, lay, y.data);
  const int N = lay.N();
  const int nx = lay.nx();
  double L = lin.objective;
  L += point.chi[0].dot(point.x[0] - s);
  for (int k = 0; k < N; ++k) {
    L += point.chi[k + 1].dot(lin.stages[k].dyn - point.x[k + 1]);
  }
  for (int k = 0; k <= N; ++k) {
    const int nc = lay.nc(k);
    if (nc > 0) L += y.data.segment(lay.lam(k), nc).dot(lin.stages[k].con);
  }
  if (lay.has_zeta()) L += point.zeta.dot(point.u[0] - *a);
  (void)nx;
  return L;
}

double objective(const ParametricOcp& ocp, const PrimalDualPoint& point) {
  PackedVector y = pack(point, ocp.dims);
  return linearize(ocp, y.layout, y.data).objective;
}

std::vector<Matrix> exact_hessian(const ParametricOcp& ocp,
                                  const PrimalDualPoint& point) {
  require_second_derivatives(ocp);
  PackedVector y = pack(point, ocp.dims);
  return linearize(ocp, y.layout, y.data, HessianMode::kExact).hessians;
}

KktSystem make_kkt_system(const Linearization& lin,
                          const std::vector<Matrix>& hessians,
                          const Vector& duals) {
  const Layout& lay = lin.layout;
  KktSystem sys;
  sys.layout = lay;
  sys.stages.resize(lay.N() + 1);
  for (int k = 0; k <= lay.N(); ++k) {
    KktStage& st = sys.stages[k];
    st.H = hessians[k];
    if (k < lay.N()) st.F = lin.stages[k].dyn_jac;
    st.J = lin.stages[k].con_jac;
    st.lam = duals.segment(lay.lam(k), lay.nc(k));
    st.t = duals.segment(lay.t(k), lay.nc(k));
  }
  return sys;
}

Matrix assemble_kkt_matrix(const KktSystem& sys) {
  const Layout& lay = sys.layout;
  const int N = lay.N();
  const int nx = lay.nx();
  const int nu = lay.nu();
  Matrix M = Matrix::Zero(lay.size(), lay.size());
  const Matrix I = Matrix::Identity(nx, nx);
  for (int k = 0; k <= N; ++k) {
    const KktStage& st = sys.stages[k];
    const int z = lay.z(k), nz = lay.nz(k), nc = lay.nc(k);
    M.block(z, z, nz, nz) = st.H;
    if (k < N) M.block(z, lay.chi(k + 1), nz, nx) = st.F.transpose();
    if (nc > 0) {
      M.block(z, lay.lam(k), nz, nc) = st.J.transpose();
      M.block(lay.lam(k), z, nc, nz) = st.J;
      M.block(lay.lam(k), lay.t(k), nc, nc).diagonal().setOnes();
      M.block(lay.t(k), lay.lam(k), nc, nc).diagonal() = st.t;
      M.block(lay.t(k), lay.t(k), nc, nc).diagonal() = st.lam;
    }
    if (k == 0) {
      M.block(z, lay.chi(0), nx, nx) = I;
      M.block(lay.chi(0), z, nx, nx) = I;
    } else {
      M.block(lay.x(k), lay.chi(k), nx, nx) = -I;
      M.block(lay.chi(k), lay.z(k - 1), nx, lay.nz(k - 1)) =
          sys.stages[k - 1].F;
      M.block(lay.chi(k), lay.x(k), nx, nx) = -I;
    }
  }
  if (lay.has_zeta()) {
    M.block(lay.u(0), lay.zeta(), nu, nu).diagonal().setOnes();
    M.block(lay.zeta(), lay.u(0), nu, nu).diagonal().setOnes();
  }
  return M;
}

Matrix apply_kkt_matrix(const KktSystem& sys, const Matrix& W) {
  const Layout& lay = sys.layout;
  if (W.rows() != lay.size()) throw DimensionError("apply: row mismatch");
  const int N = lay.N();
  const int nx = lay.nx();
  const int nu = lay.nu();
  const int m = static_cast<int>(W.cols());
  Matrix out = Matrix::Zero(lay.size(), m);
  for (int k = 0; k <= N; ++k) {
    const KktStage& st = sys.stages[k];
    const int z = lay.z(k), nz = lay.nz(k), nc = lay.nc(k);
    auto o = out.middleRows(z, nz);
    o.noalias() += st.H * W.middleRows(z, nz);
    if (k < N) o.noalias() += st.F.transpose() * W.middleRows(lay.chi(k + 1), nx);
    if (nc > 0) {
      o.noalias() += st.J.transpose() * W.middleRows(lay.lam(k), nc);
      auto p = out.middleRows(lay.lam(k), nc);
      p.noalias() += st.J * W.middleRows(z, nz);
      p += W.middleRows(lay.t(k), nc);
      out.middleRows(lay.t(k), nc) =
          st.t.asDiagonal() * W.middleRows(lay.lam(k), nc) +
          st.lam.asDiagonal() * W.middleRows(lay.t(k), nc);
    }
    if (k == 0) {
      out.middleRows(z, nx) += W.middleRows(lay.chi(0), nx);
      out.middleRows(lay.chi(0), nx) = W.middleRows(z, nx);
    } else {
      out.middleRows(z, nx) -= W.middleRows(lay.chi(k), nx);
      out.middleRows(lay.chi(k), nx) =
          sys.stages[k - 1].F * W.middleRows(lay.z(k - 1), lay.nz(k - 1)) -
          W.middleRows(lay.x(k), nx);
    }
  }
  if (lay.has_zeta()) {
    out.middleRows(lay.u(0), nu) += W.middleRows(lay.zeta(), nu);
    out.middleRows(lay.zeta(), nu) = W.middleRows(lay.u(0), nu);
  }
  return out;
}

double mean_complementarity(const Layout& lay, const Vector& y) {
  if (lay.n_inequalities() == 0) return 0.0;
  double sum = 0.0;
  for (int k = 0; k <= lay.N(); ++k) {
    const int nc = lay.nc(k);
    sum += y.segment(lay.lam(k), nc).dot(y.segment(lay.t(k), nc));
  }
  return sum / lay.n_inequalities();
}

bool interior(const Layout& lay, const Vector& y) {
  for (int k = 0; k <= lay.N(); ++k) {
    const int nc = lay.nc(k);
    if (nc == 0) continue;
    if (!(y.segment(lay.lam(k), nc).minCoeff() > 0.0)) return false;
    if (!(y.segment(lay.t(k), nc).minCoeff() > 0.0)) return false;
  }
  return true;
}

}  // namespace diffmpc
