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

#include "diffmpc/agent.hpp"

#include <spdlog/spdlog.h>

namespace diffmpc {

namespace {

bool same(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.size() == 0 || a == b);
}

}  // namespace

MpcAgent::MpcAgent(ParametricOcp ocp, SolverSettings settings)
    : ocp_(std::move(ocp)), settings_(settings) {
  settings_.check();
  auto report = validate(ocp_);
  if (!report.ok()) {
    throw DimensionError("invalid OCP: " + report.mismatches.front());
  }
}

void MpcAgent::set_theta(const Vector& theta) {
  ocp_.set_theta(theta);
  ++theta_version_;
}

void MpcAgent::reset_cache() {
  last_v_.reset();
  last_q_.reset();
  ++theta_version_;
}

bool MpcAgent::cached(const std::optional<SolveResult>& r,
                      const Vector& s) const {
  return r && same(r->s, s);
}

SolveResult MpcAgent::solve(const Vector& s, const std::optional<Vector>& a) {
  std::optional<PrimalDualPoint> warm;
  if (last_v_) {
    warm = last_v_->point;
  } else if (a && last_q_) {
    warm = last_q_->point;
  }
  SolveResult r = sqp_solve(ocp_, s, a, warm, settings_);
  if (!r.info.converged() && warm) {
    spdlog::debug("agent: warm-started solve failed ({}), retrying cold",
                  to_string(r.info.status));
    SolveResult cold = sqp_solve(ocp_, s, a, std::nullopt, settings_);
    cold.info.ip_iters_total += r.info.ip_iters_total;
    r = std::move(cold);
  }
  if (!r.info.converged()) {
    throw SolveFailure(r.info, std::string(a ? "Q" : "V") +
                                   "-NLP solve failed: " +
                                   to_string(r.info.status) + ", residual " +
                                   std::to_string(r.info.final_kkt_residual));
  }
  return r;
}

MpcAgent::Evaluation MpcAgent::value(const Vector& s) {
  if (v_version_ == theta_version_ && cached(last_v_, s)) {
    return {last_v_->info.objective_value, *last_v_};
  }
  SolveResult r = solve(s, std::nullopt);
  last_v_ = r;
  v_version_ = theta_version_;
  return {r.info.objective_value, std::move(r)};
}

MpcAgent::Evaluation MpcAgent::action_value(const Vector& s, const Vector& a) {
  if (a.size() != ocp_.dims.nu) {
    throw DimensionError("action has wrong size");
  }
  const int ng = ocp_.dims.ng[0];
  if (ng > 0) {
    Vector z = Vector::Zero(ocp_.dims.nz(0));
    z.segment(ocp_.dims.nx, ocp_.dims.nu) = a;
    Vector g(ng);
    ocp_.input_constraint->eval(0, z, ocp_.theta(), g);
    if (g.maxCoeff() > 0.0) {
      throw PreconditionError("action violates the input constraints");
    }
  }
  if (q_version_ == theta_version_ && cached(last_q_, s) &&
      same(*last_q_->a, a)) {
    return {last_q_->info.objective_value, *last_q_};
  }
  // Prefer the value solution at this state as the warm start.
  if (!(v_version_ == theta_version_ && cached(last_v_, s))) value(s);
  SolveResult r = solve(s, a);
  last_q_ = r;
  q_version_ = theta_version_;
  return {r.info.objective_value, std::move(r)};
}

MpcAgent::Action MpcAgent::act(const Vector& s) {
  Evaluation e = value(s);
  Vector a = e.solution.point.u[0];
  return {std::move(a), std::move(e.solution)};
}

Vector MpcAgent::grad_v(const Vector& s) {
  return grad_v_theta(ocp_, value(s).solution);
}

Vector MpcAgent::grad_q(const Vector& s, const Vector& a) {
  return grad_q_theta(ocp_, action_value(s, a).solution);
}

}  // namespace diffmpc
