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

// JSON run configuration and the train / bench / check commands.
//
// Config layout (every key optional, unknown keys are errors):
//
//   {
//     "example": "lti_qlearning" | "chain_mass_bench",
//     "output_dir": "out",
//     "seed": 0,
//     "solver": {"kkt_tol", "tau_min", "tau_decrease", "max_ip_iters",
//                "max_sqp_iters", "hessian_mode", "reg_eps",
//                "fraction_to_boundary"},
//     "mpc":    {"horizon", "gamma", "w", "lb", "ub", "u_min", "u_max"},
//     "train":  {"episodes", "steps_per_episode", "learning_rate", "gamma",
//                "update_mode", "batch_size", "buffer_capacity",
//                "initial_state", "max_consecutive_failures"},
//     "bench":  {"mass_counts", "repetitions", "warmup", "mass_increment",
//                "fd_step", "agreement_tol", "horizon", "dt", "u_max",
//                "q_weight", "r_weight"}
//   }
//
// "solver" overrides the defaults of whichever example runs; the chain-mass
// benchmark starts from BenchConfig's solver settings.

#pragma once

#include <ostream>
#include <stdexcept>
#include <string>

#include "diffmpc/bench.hpp"
#include "diffmpc/models.hpp"
#include "diffmpc/rl.hpp"

namespace diffmpc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string example = "lti_qlearning";
  std::string output_dir = "out";
  SolverSettings lti_solver;
  LtiOcpConfig mpc;
  TrainConfig train;
  BenchConfig bench;
};

// Throws ConfigError on malformed JSON, wrong types, unknown keys or
// invalid values.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Writes episode_<i>.csv (i = 0 is an evaluation rollout under the initial
// theta), data.csv and theta.json into config.output_dir.
int cmd_train(const RunConfig& config);
// Writes timings.csv and timings_detail.csv into config.output_dir.
int cmd_bench(const RunConfig& config);

struct CheckOptions {
  bool inject_sign_error = false;  // negates analytic gradients (self-test)
};
// Runs the Bellman, FD-gradient and IFT-residual suites and prints a table.
// Returns 0 iff every suite passes.
int cmd_check(const RunConfig& config, const CheckOptions& options,
              std::ostream& os);

// Frozen CSV headers.
inline constexpr const char* kEpisodeCsvHeader = "k,x_0,x_1,u,cost";
inline constexpr const char* kDataCsvHeader =
    "episode,B_0,B_1,b_0,b_1,f_0,f_1,f_2,V_0,cost";

int run_cli(int argc, char** argv);

}  // namespace diffmpc
