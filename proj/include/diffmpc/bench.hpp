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

// Policy-gradient timing on the chain-mass OCP: forward differences,
// dense KKT solve and Riccati-structured solve.

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "diffmpc/models.hpp"
#include "diffmpc/solver.hpp"

namespace diffmpc {

struct BenchConfig {
  std::vector<int> mass_counts{3, 4, 5, 6};
  int repetitions = 100;
  int warmup = 1;               // untimed evaluations per method and size
  double mass_increment = 1e-3;  // added to mass 2 before each repetition
  double fd_step = 1e-6;
  double agreement_tol = 1e-4;
  ChainMassOcpConfig ocp;
  double dt = 0.1;
  SolverSettings solver;  // used for the base solves and the FD re-solves
  std::string output;     // timings CSV; empty: no file
  std::string detail_output;  // per-size diagnostics CSV; empty: no file

  BenchConfig();
  void check() const;
};

struct TimingRow {
  int n = 0;
  int n_theta = 0;
  bool ok = false;
  std::string status;  // "ok" or the failure reason
  // Mean milliseconds per policy-gradient evaluation (solve excluded).
  double finitedifferences = 0.0;
  double dense = 0.0;
  double structured = 0.0;
  double solve = 0.0;  // mean base solve time
  double max_rel_err = 0.0;
  double max_residual = 0.0;  // largest IFT residual seen
  int repetitions = 0;
};

// Runs all sizes; failures mark the row and the run continues.
std::vector<TimingRow> run_bench(const BenchConfig& config);

// n,finitedifferences,dense,structured (failed rows carry nan).
void write_timings_csv(std::ostream& os, const std::vector<TimingRow>& rows);
// One row per size with the remaining diagnostics.
void write_detail_csv(std::ostream& os, const std::vector<TimingRow>& rows);

// ||a - b||_inf / max(||a||_inf, ||b||_inf, tiny)
double relative_error(const Matrix& a, const Matrix& b);

}  // namespace diffmpc
