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

#include "diffmpc/solver.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace diffmpc {

namespace {

std::atomic<long> g_sqp_solves{0};

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Largest step in (0, 1] that keeps multipliers and slacks above
// (1 - fraction) of their current values.
double max_step(const Layout& lay, const Vector& w, const Vector& dw,
                double fraction) {
  double alpha = 1.0;
  for (int k = 0; k <= lay.N(); ++k) {
    const int nc = lay.nc(k);
    for (int base : {lay.lam(k), lay.t(k)}) {
      for (int i = base; i < base + nc; ++i) {
        if (dw[i] < 0.0) alpha = std::min(alpha, -fraction * w[i] / dw[i]);
      }
    }
  }
  return alpha;
}

// Lifts multipliers and slacks to at least `floor`.
void make_interior(const Layout& lay, Vector& y, double floor) {
  for (int k = 0; k <= lay.N(); ++k) {
    const int nc = lay.nc(k);
    for (int base : {lay.lam(k), lay.t(k)}) {
      for (int i = base; i < base + nc; ++i) y[i] = std::max(y[i], floor);
    }
  }
}

Vector input_constraint_jacobian_t_nu(const ParametricOcp& ocp,
                                      const PrimalDualPoint& p) {
  const int ng = ocp.dims.ng[0];
  const int nu = ocp.dims.nu;
  Vector zeta = Vector::Zero(nu);
  if (ng == 0) return zeta;
  Vector z(ocp.dims.nz(0));
  z << p.x[0], p.u[0], p.sigma[0];
  Matrix G(ng, z.size());
  ocp.input_constraint->jacobian(0, z, ocp.theta(), G);
  return G.middleCols(ocp.dims.nx, nu).transpose() * p.nu[0];
}

}  // namespace

void SolverSettings::check() const {
  if (!(kkt_tol > 0.0)) throw PreconditionError("kkt_tol must be positive");
  if (!(tau_min > 0.0)) throw PreconditionError("tau_min must be positive");
  if (!(tau_decrease > 0.0 && tau_decrease < 1.0)) {
    throw PreconditionError("tau_decrease must lie in (0, 1)");
  }
  if (max_ip_iters < 1 || max_sqp_iters < 1) {
    throw PreconditionError("iteration limits must be at least 1");
  }
  if (!(reg_eps > 0.0)) throw PreconditionError("reg_eps must be positive");
  if (!(fraction_to_boundary > 0.0 && fraction_to_boundary < 1.0)) {
    throw PreconditionError("fraction_to_boundary must lie in (0, 1)");
  }
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kMaxIters:
      return "max_iters";
    case SolveStatus::kQpFailure:
      return "qp_failure";
  }
  return "unknown";
}

long sqp_solve_count() { return g_sqp_solves.load(); }

QpModel make_qp_model(const ParametricOcp& ocp, const Layout& layout,
                      const Vector& y_ref, HessianMode mode) {
  return {linearize(ocp, layout, y_ref, mode), y_ref};
}

PrimalDualPoint cold_start(const ParametricOcp& ocp, const Vector& s,
                           const std::optional<Vector>& a) {
  const Mode mode = a ? Mode::kActionValue : Mode::kValue;
  PrimalDualPoint p = PrimalDualPoint::zeros(ocp.dims, mode);
  for (auto& x : p.x) x = s;
  if (a) p.u[0] = *a;
  PackedVector y = pack(p, ocp.dims);
  const Layout& lay = y.layout;
  Linearization lin = linearize(ocp, lay, y.data);
  for (int k = 0; k <= lay.N(); ++k) {
    const int nc = lay.nc(k);
    y.data.segment(lay.lam(k), nc).setOnes();
    y.data.segment(lay.t(k), nc) =
        (-lin.stages[k].con).cwiseMax(Vector::Ones(nc));
  }
  return unpack(y.data, ocp.dims, mode);
}

PrimalDualPoint transfer_point(const ParametricOcp& ocp,
                               const PrimalDualPoint& point, Mode target) {
  check_shape(point, ocp.dims);
  if (point.mode == target) return point;
  PrimalDualPoint out = point;
  out.mode = target;
  const int ng = ocp.dims.ng[0];
  if (target == Mode::kActionValue) {
    // u_0 = a replaces the stage-0 input rows; their force moves to zeta.
    out.zeta = input_constraint_jacobian_t_nu(ocp, point);
    out.nu[0].resize(0);
    out.t_nu[0].resize(0);
  } else {
    out.zeta.resize(0);
    out.nu[0] = Vector::Ones(ng);
    Vector z(ocp.dims.nz(0));
    z << point.x[0], point.u[0], point.sigma[0];
    Vector g(ng);
    if (ng > 0) ocp.input_constraint->eval(0, z, ocp.theta(), g);
    out.t_nu[0] = (-g).cwiseMax(Vector::Constant(ng, 1e-8));
  }
  return out;
}

SolveResult ip_solve_qp(const QpModel& qp, const Vector& s,
                        const std::optional<Vector>& a,
                        const std::optional<Vector>& warm,
                        const SolverSettings& settings) {
  const Linearization* lin = &qp.lin;
  const Layout& lay = lin->layout;
  if (lin->hessians.empty()) {
    throw PreconditionError("QP model has no Hessians");
  }
  Linearization shifted;  // used once regularization kicks in

  Vector w = Vector::Zero(lay.size());
  if (warm) {
    if (warm->size() != lay.size()) {
      throw DimensionError("QP warm start has wrong length");
    }
    w = *warm;
    for (int k = 0; k <= lay.N(); ++k) w.segment(lay.z(k), lay.nz(k)).setZero();
    make_interior(lay, w, 1e-14);
  } else {
    for (int k = 0; k <= lay.N(); ++k) {
      const int nc = lay.nc(k);
      w.segment(lay.lam(k), nc).setOnes();
      w.segment(lay.t(k), nc) =
          (-lin->stages[k].con).cwiseMax(Vector::Ones(nc));
    }
  }

  SolveInfo info;
  info.status = SolveStatus::kQpFailure;
  Vector best = w;
  double best_res = kInf;
  int iters = 0;
  std::vector<double> shifts(lay.N() + 1, 0.0);
  for (;; ++iters) {
    Vector r = kkt_residual_from(*lin, w, &w, s, a, settings.tau_min);
    const double res = inf_norm(r);
    if (!std::isfinite(res)) break;
    if (res < best_res) {
      best_res = res;
      best = w;
    }
    if (res <= settings.kkt_tol) {
      info.status = SolveStatus::kConverged;
      break;
    }
    if (iters >= settings.max_ip_iters) break;

    double tau = settings.tau_min;
    if (lay.n_inequalities() > 0) {
      tau = std::max(settings.tau_min,
                     settings.tau_decrease * mean_complementarity(lay, w));
    }
    for (int k = 0; k <= lay.N(); ++k) {
      r.segment(lay.t(k), lay.nc(k)).array() += settings.tau_min - tau;
    }

    std::optional<RiccatiFactorization> fact;
    for (int attempt = 0; !fact; ++attempt) {
      try {
        fact = riccati_factorize(make_kkt_system(*lin, lin->hessians, w));
      } catch (const FactorizationError& e) {
        if (settings.hessian_mode != HessianMode::kRegularized ||
            attempt >= 40) {
          spdlog::debug("ip: factorization failed: {}", e.what());
          info.ip_iters_total = iters;
          info.final_kkt_residual = best_res;
          return {unpack(qp.y_ref, lay.dims(), lay.mode()), qp.y_ref, info,
                  s, a};
        }
        if (lin != &shifted) {
          shifted = qp.lin;
          lin = &shifted;
        }
        const int k = e.stage();
        const double shift =
            shifts[k] == 0.0 ? settings.reg_eps : 9.0 * shifts[k];
        shifted.hessians[k].diagonal().array() += shift;
        shifts[k] += shift;
      }
    }
    // Residual of the possibly shifted model.
    if (lin == &shifted) {
      r = kkt_residual_from(*lin, w, &w, s, a, tau);
    }
    const Vector dw = riccati_backsolve(*fact, Vector(-r));
    if (!dw.allFinite()) break;
    const double alpha =
        max_step(lay, w, dw, settings.fraction_to_boundary);
    w += alpha * dw;
  }

  Vector y = qp.y_ref;
  for (int k = 0; k <= lay.N(); ++k) {
    y.segment(lay.z(k), lay.nz(k)) += best.segment(lay.z(k), lay.nz(k));
    const int c = lay.chi(k);
    const int end = k < lay.N() ? lay.z(k + 1) : lay.size();
    y.segment(c, end - c) = best.segment(c, end - c);
  }
  if (lay.has_zeta()) {
    y.segment(lay.zeta(), lay.nu()) = best.segment(lay.zeta(), lay.nu());
  }
  info.ip_iters_total = iters;
  info.final_kkt_residual = best_res;
  info.final_tau = settings.tau_min;
  return {unpack(y, lay.dims(), lay.mode()), y, info, s, a};
}

SolveResult sqp_solve(const ParametricOcp& ocp, const Vector& s,
                      const std::optional<Vector>& a,
                      const std::optional<PrimalDualPoint>& warm,
                      const SolverSettings& settings) {
  ++g_sqp_solves;
  settings.check();
  if (s.size() != ocp.dims.nx) {
    throw DimensionError("state has " + std::to_string(s.size()) +
                         " entries, expected " + std::to_string(ocp.dims.nx));
  }
  if (a && a->size() != ocp.dims.nu) {
    throw DimensionError("action has " + std::to_string(a->size()) +
                         " entries, expected " + std::to_string(ocp.dims.nu));
  }
  if (ocp.theta().size() != ocp.dims.n_theta) {
    throw DimensionError("theta length differs from n_theta");
  }
  const Mode mode = a ? Mode::kActionValue : Mode::kValue;
  const Layout lay(ocp.dims, mode);
  Vector y = warm ? pack(transfer_point(ocp, *warm, mode), ocp.dims).data
                  : pack(cold_start(ocp, s, a), ocp.dims).data;
  make_interior(lay, y, 1e-14);

  SolveInfo info;
  info.final_tau = settings.tau_min;
  Linearization lin = linearize(ocp, lay, y);
  double res =
      inf_norm(kkt_residual_from(lin, y, nullptr, s, a, settings.tau_min));
  for (;;) {
    info.final_kkt_residual = res;
    info.objective_value = lin.objective;
    if (!std::isfinite(res)) {
      info.status = SolveStatus::kQpFailure;
      break;
    }
    if (res <= settings.kkt_tol) {
      info.status = SolveStatus::kConverged;
      break;
    }
    if (info.sqp_iters >= settings.max_sqp_iters) {
      info.status = SolveStatus::kMaxIters;
      break;
    }
    compute_hessians(ocp, lin, y, settings.hessian_mode);
    QpModel qp{std::move(lin), y};
    SolveResult q = ip_solve_qp(qp, s, a, y, settings);
    ++info.sqp_iters;
    info.ip_iters_total += q.info.ip_iters_total;
    if (q.info.status != SolveStatus::kConverged) {
      spdlog::debug("sqp: QP failed at iteration {} (residual {:.3e})",
                    info.sqp_iters, q.info.final_kkt_residual);
      info.status = SolveStatus::kQpFailure;
      lin = std::move(qp.lin);
      break;
    }
    const Vector dy = q.packed - y;

    // Residual-decrease acceptance on the NLP residual at tau_min.
    double alpha = 1.0;
    double best_res = kInf;
    Vector best_y;
    Linearization best_lin;
    for (int halving = 0; halving < 30; ++halving, alpha *= 0.5) {
      Vector trial = y + alpha * dy;
      if (!trial.allFinite() || !interior(lay, trial)) continue;
      Linearization tl;
      double tres;
      try {
        tl = linearize(ocp, lay, trial);
        tres = inf_norm(
            kkt_residual_from(tl, trial, nullptr, s, a, settings.tau_min));
      } catch (const std::exception& e) {
        spdlog::debug("sqp: trial step rejected: {}", e.what());
        continue;
      }
      if (!std::isfinite(tres)) continue;
      if (tres < best_res) {
        best_res = tres;
        best_y = std::move(trial);
        best_lin = std::move(tl);
      }
      if (tres < res) break;
    }
    if (!std::isfinite(best_res)) {
      info.status = SolveStatus::kQpFailure;
      lin = std::move(qp.lin);
      break;
    }
    spdlog::debug("sqp: iter {} residual {:.3e} -> {:.3e} (alpha {})",
                  info.sqp_iters, res, best_res, alpha);
    y = std::move(best_y);
    lin = std::move(best_lin);
    res = best_res;
  }
  info.objective_value = lin.objective;
  info.final_kkt_residual = res;
  return {unpack(y, ocp.dims, mode), y, info, s, a};
}

}  // namespace diffmpc
