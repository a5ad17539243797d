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

// SQP with an interior-point QP solver on the Riccati-factorized KKT system.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diffmpc/kkt.hpp"
#include "diffmpc/riccati.hpp"

namespace diffmpc {

struct SolverSettings {
  double kkt_tol = 1e-8;
  double tau_min = 1e-8;
  double tau_decrease = 0.2;
  int max_ip_iters = 100;
  int max_sqp_iters = 50;
  HessianMode hessian_mode = HessianMode::kExact;
  double reg_eps = 1e-8;
  double fraction_to_boundary = 0.995;

  // Throws PreconditionError on out-of-range values.
  void check() const;
};

enum class SolveStatus { kConverged, kMaxIters, kQpFailure };

const char* to_string(SolveStatus status);

struct SolveInfo {
  SolveStatus status = SolveStatus::kMaxIters;
  int sqp_iters = 0;
  int ip_iters_total = 0;
  double final_kkt_residual = 0.0;
  double final_tau = 0.0;
  double objective_value = 0.0;

  bool converged() const { return status == SolveStatus::kConverged; }
};

struct SolveResult {
  PrimalDualPoint point;
  Vector packed;  // point in Layout order
  SolveInfo info;
  Vector s;       // initial state the point was solved for
  std::optional<Vector> a;
};

// A solve that was required to converge did not.
class SolveFailure : public SolverError {
 public:
  SolveFailure(const SolveInfo& info, const std::string& what)
      : SolverError(what), info_(info) {}
  const SolveInfo& info() const { return info_; }

 private:
  SolveInfo info_;
};

// Quadratic model of the NLP around the packed point y_ref. The QP unknowns
// are the primal step dz and absolute multipliers and slacks.
struct QpModel {
  Linearization lin;  // hessians filled
  Vector y_ref;
};

QpModel make_qp_model(const ParametricOcp& ocp, const Layout& layout,
                      const Vector& y_ref, HessianMode mode);

// Primal-dual interior-point method on the QP. `warm` holds initial
// multipliers/slacks in packed form (its z-slots are ignored; the primal
// step starts at zero). On return, `point`/`packed` hold y_ref + dz with
// the QP multipliers. Status kQpFailure if max_ip_iters is exhausted or a
// factorization cannot be repaired; the best iterate is attached.
SolveResult ip_solve_qp(const QpModel& qp, const Vector& s,
                        const std::optional<Vector>& a,
                        const std::optional<Vector>& warm,
                        const SolverSettings& settings);

// Solves the value NLP (a empty) or the action-value NLP (u_0 = a).
// `warm` may be a point of either mode; a value-mode point is extended
// with zeta = G_0' nu_0 for action-mode solves.
SolveResult sqp_solve(const ParametricOcp& ocp, const Vector& s,
                      const std::optional<Vector>& a,
                      const std::optional<PrimalDualPoint>& warm,
                      const SolverSettings& settings);

// Default starting point: x_k = s, u = 0 (u_0 = a in action mode),
// sigma = 0, equality multipliers 0, inequality multipliers 1 and
// t = max(-c, 1).
PrimalDualPoint cold_start(const ParametricOcp& ocp, const Vector& s,
                           const std::optional<Vector>& a);

// Converts a point between modes (see sqp_solve for the zeta rule).
PrimalDualPoint transfer_point(const ParametricOcp& ocp,
                               const PrimalDualPoint& point, Mode target);

// Number of sqp_solve calls since process start (instrumentation).
long sqp_solve_count();

}  // namespace diffmpc
