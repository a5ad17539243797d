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

#include "diffmpc/bench.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "diffmpc/sensitivity.hpp"

namespace diffmpc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Gradients {
  Matrix fd, dense, structured;
  double t_fd = 0.0, t_dense = 0.0, t_structured = 0.0;
  double residual = 0.0;
  double rel_err = 0.0;
};

Gradients evaluate(const ParametricOcp& ocp, const SolveResult& sol,
                   const BenchConfig& cfg) {
  Gradients g;
  const Layout lay(ocp.dims, Mode::kValue);
  SensitivityOptions opt;
  opt.residual_check = false;

  opt.method = GradientMethod::kStructured;
  auto t0 = Clock::now();
  SolutionSensitivity s = solution_sensitivity(ocp, sol, opt);
  g.structured = s.dy_dtheta.middleRows(lay.u(0), lay.nu());
  g.t_structured = ms_since(t0);
  g.residual = ift_residual(ocp, sol, s.dy_dtheta);

  opt.method = GradientMethod::kDense;
  t0 = Clock::now();
  SolutionSensitivity d = solution_sensitivity(ocp, sol, opt);
  g.dense = d.dy_dtheta.middleRows(lay.u(0), lay.nu());
  g.t_dense = ms_since(t0);
  g.residual = std::max(g.residual, ift_residual(ocp, sol, d.dy_dtheta));

  t0 = Clock::now();
  g.fd = fd_policy_gradient(ocp, sol, cfg.fd_step, cfg.solver);
  g.t_fd = ms_since(t0);

  g.rel_err = std::max({relative_error(g.structured, g.dense),
                        relative_error(g.structured, g.fd),
                        relative_error(g.dense, g.fd)});
  return g;
}

TimingRow run_size(int n, const BenchConfig& cfg) {
  TimingRow row;
  row.n = n;
  ChainMassParams params = ChainMassParams::defaults(n);
  params.dt = cfg.dt;
  ChainMassProblem prob = make_chain_mass_ocp(params, cfg.ocp);
  row.n_theta = prob.ocp.dims.n_theta;

  SolveResult sol =
      sqp_solve(prob.ocp, prob.x0, std::nullopt, std::nullopt, cfg.solver);
  if (!sol.info.converged()) {
    row.status = std::string("base solve ") + to_string(sol.info.status);
    return row;
  }
  for (int w = 0; w < cfg.warmup; ++w) evaluate(prob.ocp, sol, cfg);

  double sum_fd = 0.0, sum_dense = 0.0, sum_structured = 0.0, sum_solve = 0.0;
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    params.mass[2] += cfg.mass_increment;
    prob.ocp.dynamics = make_chain_mass_dynamics(params);
    auto t0 = Clock::now();
    sol = sqp_solve(prob.ocp, prob.x0, std::nullopt, sol.point, cfg.solver);
    sum_solve += ms_since(t0);
    if (!sol.info.converged()) {
      row.status = "solve failed at repetition " + std::to_string(rep) +
                   " (" + to_string(sol.info.status) + ")";
      return row;
    }
    Gradients g = evaluate(prob.ocp, sol, cfg);
    row.max_rel_err = std::max(row.max_rel_err, g.rel_err);
    row.max_residual = std::max(row.max_residual, g.residual);
    if (!(g.rel_err <= cfg.agreement_tol)) {
      row.status = "gradients disagree at repetition " + std::to_string(rep) +
                   " (rel err " + std::to_string(g.rel_err) + ")";
      return row;
    }
    sum_fd += g.t_fd;
    sum_dense += g.t_dense;
    sum_structured += g.t_structured;
    ++row.repetitions;
  }
  const double reps = row.repetitions;
  row.finitedifferences = sum_fd / reps;
  row.dense = sum_dense / reps;
  row.structured = sum_structured / reps;
  row.solve = sum_solve / reps;
  row.ok = true;
  row.status = "ok";
  return row;
}

void write_number(std::ostream& os, bool ok, double v) {
  if (ok) {
    os << v;
  } else {
    os << "nan";
  }
}

}  // namespace

BenchConfig::BenchConfig() {
  solver.hessian_mode = HessianMode::kGaussNewton;
  solver.kkt_tol = 1e-12;
  solver.max_sqp_iters = 200;
}

void BenchConfig::check() const {
  if (repetitions < 1) throw PreconditionError("repetitions must be >= 1");
  if (warmup < 0) throw PreconditionError("warmup must be >= 0");
  if (mass_counts.empty()) throw PreconditionError("mass_counts is empty");
  for (int n : mass_counts) {
    if (n < 3 || n > 6) throw PreconditionError("mass counts must be in 3..6");
  }
  if (!(fd_step > 0.0)) throw PreconditionError("fd_step must be positive");
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  solver.check();
}

double relative_error(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("relative_error: shape mismatch");
  }
  if (a.size() == 0) return 0.0;
  const double scale = std::max({a.cwiseAbs().maxCoeff(),
                                 b.cwiseAbs().maxCoeff(), 1e-300});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

std::vector<TimingRow> run_bench(const BenchConfig& config) {
  config.check();
  std::vector<TimingRow> rows;
  for (int n : config.mass_counts) {
    TimingRow row;
    try {
      row = run_size(n, config);
    } catch (const std::exception& e) {
      row.n = n;
      row.ok = false;
      row.status = e.what();
    }
    if (row.ok) {
      spdlog::info(
          "bench n={} n_theta={}: fd {:.3f} ms, dense {:.3f} ms, structured "
          "{:.3f} ms (rel err {:.2e}, residual {:.2e})",
          row.n, row.n_theta, row.finitedifferences, row.dense, row.structured,
          row.max_rel_err, row.max_residual);
    } else {
      spdlog::warn("bench n={} failed: {}", row.n, row.status);
    }
    rows.push_back(row);
  }
  return rows;
}

void write_timings_csv(std::ostream& os, const std::vector<TimingRow>& rows) {
  os << "n,finitedifferences,dense,structured\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.n << ',';
    write_number(os, r.ok, r.finitedifferences);
    os << ',';
    write_number(os, r.ok, r.dense);
    os << ',';
    write_number(os, r.ok, r.structured);
    os << '\n';
  }
}

void write_detail_csv(std::ostream& os, const std::vector<TimingRow>& rows) {
  os << "n,n_theta,status,repetitions,solve,finitedifferences,dense,"
        "structured,max_rel_err,max_ift_residual\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    std::string status = r.status;
    for (char& c : status) {
      if (c == ',' || c == '\n') c = ';';
    }
    os << r.n << ',' << r.n_theta << ',' << status << ',' << r.repetitions
       << ',';
    write_number(os, r.ok, r.solve);
    os << ',';
    write_number(os, r.ok, r.finitedifferences);
    os << ',';
    write_number(os, r.ok, r.dense);
    os << ',';
    write_number(os, r.ok, r.structured);
    os << ',' << r.max_rel_err << ',' << r.max_residual << '\n';
  }
}

}  // namespace diffmpc
