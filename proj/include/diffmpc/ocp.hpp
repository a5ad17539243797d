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

// Parametric optimal control problem
//
//   V(s) = min  sum_k [ l(k, x_k, u_k) + rho(k, sigma_k) ] + Vf(x_N) + rhof(sigma_N)
//          s.t. x_0 = s,  x_{k+1} = f(x_k, u_k),
//               g(u_k) <= 0,  h(x_k, u_k, sigma_k) <= 0,  hf(x_N, sigma_N) <= 0,
//
// with every function depending on the parameter vector theta (except g
// and the slack penalties). The action-value variant adds u_0 = a.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "diffmpc/stage_function.hpp"

namespace diffmpc {

// Which NLP is solved: the value NLP, or the action-value NLP with u_0 = a.
enum class Mode { kValue, kActionValue };

struct Dims {
  int nx = 0;
  int nu = 0;
  int n_theta = 0;
  int N = 1;
  std::vector<int> ng;  // input constraint rows, stages 0..N-1
  std::vector<int> nh;  // path constraint rows, stages 0..N-1, [N] terminal
  std::vector<int> ns;  // slack dims, stages 0..N-1, [N] terminal

  // Same constraint counts on every stage 0..N-1.
  static Dims uniform(int nx, int nu, int n_theta, int N, int ng, int nh,
                      int ns, int nh_terminal, int ns_terminal);

  // Stage vector size: nx + nu + ns[k] for k < N, nx + ns[N] at k = N.
  int nz(int k) const { return k < N ? nx + nu + ns[k] : nx + ns[N]; }

  // Dimension problems (negative sizes, wrong vector lengths, ...).
  std::vector<std::string> check() const;
};

// Named slices of the flat parameter vector.
class ThetaRegistry {
 public:
  struct Slice {
    int offset = 0;
    int length = 0;
  };

  // Appends a slice at the current end.
  void add(const std::string& name, int length);
  const Slice& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  int size() const { return size_; }
  // Slices in registration order.
  const std::vector<std::pair<std::string, Slice>>& slices() const {
    return order_;
  }

 private:
  std::vector<std::pair<std::string, Slice>> order_;
  std::map<std::string, int> index_;
  int size_ = 0;
};

struct ParametricOcp {
  Dims dims;
  ThetaRegistry registry;

  // Stage callbacks take z_k = [x_k; u_k; sigma_k] and theta.
  StageFunctionPtr stage_cost;        // 1 row
  StageFunctionPtr slack_penalty;     // 1 row, theta-free
  StageFunctionPtr dynamics;          // nx rows
  StageFunctionPtr input_constraint;  // ng[k] rows, reads u_k only, theta-free
  StageFunctionPtr path_constraint;   // nh[k] rows
  // Terminal callbacks take z_N = [x_N; sigma_N] and theta.
  StageFunctionPtr terminal_cost;           // 1 row
  StageFunctionPtr terminal_slack_penalty;  // 1 row, theta-free
  StageFunctionPtr terminal_constraint;     // nh[N] rows

  const Vector& theta() const { return theta_; }
  // Throws DimensionError unless theta.size() == dims.n_theta.
  void set_theta(const Vector& theta);

  Vector theta_slice(const std::string& name) const;

 private:
  Vector theta_;
};

inline const Vector& get_theta(const ParametricOcp& ocp) { return ocp.theta(); }
ParametricOcp set_theta(ParametricOcp ocp, const Vector& theta);

struct ValidationReport {
  std::vector<std::string> mismatches;
  bool ok() const { return mismatches.empty(); }
};

// Probes every callback at a random point and reports output sizes that
// disagree with the declared dimensions, structural violations (g reading
// x or sigma, theta-dependent slack penalties) and non-finite values.
// At most one entry per callback.
ValidationReport validate(const ParametricOcp& ocp, std::uint64_t seed = 7);

}  // namespace diffmpc
