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

#include "diffmpc/sensitivity.hpp"

#include <cmath>
#include <limits>

namespace diffmpc {

namespace {

void require_converged(const SolveResult& sol, Mode mode, const char* what) {
  if (sol.point.mode != mode) {
    throw PreconditionError(std::string(what) + ": solution has the wrong mode");
  }
  if (!sol.info.converged()) {
    throw SolveFailure(sol.info, std::string(what) +
                                     ": refusing an unconverged solution (" +
                                     to_string(sol.info.status) + ")");
  }
}

Vector lagrangian_theta_gradient(const ParametricOcp& ocp, const Layout& lay,
                                 const Vector& y) {
  const Vector& theta = ocp.theta();
  const int N = lay.N();
  const int nx = lay.nx();
  const Vector one = Vector::Ones(1);
  Vector g = Vector::Zero(theta.size());
  for (int k = 0; k <= N; ++k) {
    const Vector z = y.segment(lay.z(k), lay.nz(k));
    const int ng = lay.ng(k);
    const int nh = lay.nh(k);
    const Vector mu = y.segment(lay.lam(k) + ng, nh);
    if (k < N) {
      ocp.stage_cost->add_weighted_theta_gradient(k, z, theta, one, g);
      ocp.dynamics->add_weighted_theta_gradient(
          k, z, theta, y.segment(lay.chi(k + 1), nx), g);
      if (nh > 0) {
        ocp.path_constraint->add_weighted_theta_gradient(k, z, theta, mu, g);
      }
    } else {
      ocp.terminal_cost->add_weighted_theta_gradient(k, z, theta, one, g);
      if (nh > 0) {
        ocp.terminal_constraint->add_weighted_theta_gradient(k, z, theta, mu,
                                                             g);
      }
    }
  }
  return g;
}

}  // namespace

const char* to_string(GradientMethod method) {
  switch (method) {
    case GradientMethod::kStructured:
      return "structured";
    case GradientMethod::kDense:
      return "dense";
    case GradientMethod::kFiniteDifference:
      return "finite_difference";
  }
  return "unknown";
}

Vector grad_v_theta(const ParametricOcp& ocp, const SolveResult& sol) {
  require_converged(sol, Mode::kValue, "grad_v_theta");
  return lagrangian_theta_gradient(ocp, Layout(ocp.dims, Mode::kValue),
                                   sol.packed);
}

Vector grad_q_theta(const ParametricOcp& ocp, const SolveResult& sol) {
  require_converged(sol, Mode::kActionValue, "grad_q_theta");
  return lagrangian_theta_gradient(ocp, Layout(ocp.dims, Mode::kActionValue),
                                   sol.packed);
}

Matrix residual_theta_jacobian(const ParametricOcp& ocp, const Layout& lay,
                               const Vector& y) {
  const Vector& theta = ocp.theta();
  const int nt = static_cast<int>(theta.size());
  const int N = lay.N();
  const int nx = lay.nx();
  const Vector one = Vector::Ones(1);
  Matrix T = Matrix::Zero(lay.size(), nt);
  for (int k = 0; k <= N; ++k) {
    const int nz = lay.nz(k);
    const Vector z = y.segment(lay.z(k), nz);
    const int ng = lay.ng(k);
    const int nh = lay.nh(k);
    const Vector mu = y.segment(lay.lam(k) + ng, nh);
    auto stat = T.middleRows(lay.z(k), nz);
    const StageFunction& cost = k < N ? *ocp.stage_cost : *ocp.terminal_cost;
    const StageFunction& con =
        k < N ? *ocp.path_constraint : *ocp.terminal_constraint;
    if (cost.depends_on_theta()) cost.add_weighted_cross(k, z, theta, one, stat);
    if (nh > 0 && con.depends_on_theta()) {
      con.add_weighted_cross(k, z, theta, mu, stat);
      con.theta_jacobian(k, z, theta, T.middleRows(lay.lam(k) + ng, nh));
    }
    if (k < N && ocp.dynamics->depends_on_theta()) {
      ocp.dynamics->add_weighted_cross(k, z, theta,
                                       y.segment(lay.chi(k + 1), nx), stat);
      ocp.dynamics->theta_jacobian(k, z, theta,
                                   T.middleRows(lay.chi(k + 1), nx));
    }
  }
  return T;
}

KktJacobians kkt_jacobians(const ParametricOcp& ocp, const Vector& s,
                           const std::optional<Vector>& a,
                           const PrimalDualPoint& point, double tau) {
  (void)s;
  (void)a;
  (void)tau;
  exact_hessian(ocp, point);  // capability check
  PackedVector y = pack(point, ocp.dims);
  Linearization lin =
      linearize(ocp, y.layout, y.data, HessianMode::kExact);
  KktSystem sys = make_kkt_system(lin, lin.hessians, y.data);
  return {assemble_kkt_matrix(sys),
          residual_theta_jacobian(ocp, y.layout, y.data)};
}

SolutionSensitivity solution_sensitivity(const ParametricOcp& ocp,
                                         const SolveResult& sol,
                                         const SensitivityOptions& opt) {
  require_converged(sol, sol.point.mode, "solution_sensitivity");
  if (opt.method == GradientMethod::kFiniteDifference) {
    throw PreconditionError(
        "solution_sensitivity: use fd_policy_gradient for finite differences");
  }
  const Layout lay(ocp.dims, sol.point.mode);
  Linearization lin = linearize(ocp, lay, sol.packed);
  {
    // The implicit function theorem needs the exact Lagrangian Hessian.
    const StageFunctionPtr* fns[] = {&ocp.stage_cost,   &ocp.dynamics,
                                     &ocp.path_constraint, &ocp.terminal_cost,
                                     &ocp.terminal_constraint,
                                     &ocp.input_constraint};
    for (const auto* fn : fns) {
      if (!(*fn)->has_second_derivatives()) {
        throw CapabilityError(
            "sensitivities need exact second derivatives; wrap the model "
            "with AutoDiffFunction (make_autodiff)");
      }
    }
  }
  compute_hessians(ocp, lin, sol.packed, HessianMode::kExact);
  const KktSystem sys = make_kkt_system(lin, lin.hessians, sol.packed);
  const Matrix T = residual_theta_jacobian(ocp, lay, sol.packed);

  SolutionSensitivity out;
  if (opt.method == GradientMethod::kStructured) {
    try {
      const RiccatiFactorization fact = riccati_factorize(sys);
      out.dy_dtheta = riccati_backsolve(fact, Matrix(-T));
    } catch (const FactorizationError& e) {
      throw SingularityError(std::numeric_limits<double>::infinity(),
                             std::string("KKT matrix is singular or the "
                                         "reduced Hessian is indefinite: ") +
                                 e.what());
    }
  } else {
    const Matrix M = assemble_kkt_matrix(sys);
    Eigen::PartialPivLU<Matrix> lu(M);
    const double rcond = lu.rcond();
    if (!(rcond >= opt.min_rcond)) {
      throw SingularityError(
          rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity(),
          "KKT matrix is numerically singular (reciprocal condition " +
              std::to_string(rcond) + ")");
    }
    out.dy_dtheta = lu.solve(-T);
  }
  if (!out.dy_dtheta.allFinite()) {
    throw SingularityError(std::numeric_limits<double>::infinity(),
                           "non-finite solution sensitivity");
  }
  if (opt.residual_check) {
    const Matrix R = apply_kkt_matrix(sys, out.dy_dtheta) + T;
    out.residual_check = R.size() > 0 ? R.cwiseAbs().maxCoeff() : 0.0;
  }
  return out;
}

double ift_residual(const ParametricOcp& ocp, const SolveResult& sol,
                    const Matrix& dy_dtheta) {
  const Layout lay(ocp.dims, sol.point.mode);
  Linearization lin =
      linearize(ocp, lay, sol.packed, HessianMode::kExact);
  const KktSystem sys = make_kkt_system(lin, lin.hessians, sol.packed);
  const Matrix R = apply_kkt_matrix(sys, dy_dtheta) +
                   residual_theta_jacobian(ocp, lay, sol.packed);
  return R.size() > 0 ? R.cwiseAbs().maxCoeff() : 0.0;
}

PolicyGradient policy_gradient(const ParametricOcp& ocp,
                               const SolveResult& sol,
                               const SensitivityOptions& opt) {
  require_converged(sol, Mode::kValue, "policy_gradient");
  SolutionSensitivity sens = solution_sensitivity(ocp, sol, opt);
  const Layout lay(ocp.dims, Mode::kValue);
  return {sens.dy_dtheta.middleRows(lay.u(0), lay.nu()), sens.residual_check};
}

Matrix fd_policy_gradient(const ParametricOcp& ocp, const SolveResult& base,
                          double step, const SolverSettings& settings,
                          int* solves) {
  if (!(std::isfinite(step) && step != 0.0)) {
    throw PreconditionError("finite-difference step must be nonzero");
  }
  require_converged(base, Mode::kValue, "fd_policy_gradient");
  const int nt = ocp.dims.n_theta;
  const int nu = ocp.dims.nu;
  Matrix G(nu, nt);
  ParametricOcp work = ocp;
  Vector theta = ocp.theta();
  int count = 0;
  for (int i = 0; i < nt; ++i) {
    const double old = theta[i];
    theta[i] = old + step;
    work.set_theta(theta);
    SolveResult r = sqp_solve(work, base.s, std::nullopt, base.point, settings);
    ++count;
    theta[i] = old;
    if (!r.info.converged()) {
      if (solves) *solves = count;
      throw SolveFailure(r.info, "finite differences: solve for parameter " +
                                     std::to_string(i) + " failed (" +
                                     to_string(r.info.status) + ")");
    }
    G.col(i) = (r.point.u[0] - base.point.u[0]) / step;
  }
  if (solves) *solves = count;
  return G;
}

}  // namespace diffmpc
