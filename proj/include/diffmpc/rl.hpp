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

// Q-learning of MPC parameters.
//
//   delta = l + gamma V(s+) - Q(s, a),   theta += alpha mean(delta grad Q)

#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "diffmpc/agent.hpp"
#include "diffmpc/envs.hpp"

namespace diffmpc {

struct Transition {
  Vector s;
  Vector a;
  Vector s_next;
  double cost = 0.0;
};

// Bounded FIFO with seeded sampling without replacement.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  // Throws DomainError for non-finite entries.
  void push(Transition tr);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<Transition>& items() const { return items_; }

  // min(n, size) distinct transitions in random order.
  std::vector<Transition> sample(std::size_t n);
  // The n most recent transitions, oldest first.
  std::vector<Transition> latest(std::size_t n) const;
  void clear() { items_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
  std::mt19937_64 rng_;
};

enum class UpdateMode { kPerStep, kEpisodeBatch };

struct TrainConfig {
  int episodes = 30;
  int steps_per_episode = 100;
  double learning_rate = 1e-4;
  double gamma = 0.9;
  UpdateMode update_mode = UpdateMode::kPerStep;
  int batch_size = 1;
  std::size_t buffer_capacity = 1;
  std::uint64_t seed = 0;
  Vector initial_state = Vector::Constant(2, 0.5);
  int max_consecutive_failures = 5;

  // Throws PreconditionError on invalid values.
  void check() const;
};

struct EpisodeRecord {
  int episode = 0;
  Vector theta;          // after the episode
  double cost = 0.0;     // accumulated stage cost
  int violations = 0;    // steps whose successor violates the state bounds
  double mean_abs_td = 0.0;
  int dropped = 0;       // transitions skipped because a solve failed
  bool aborted = false;
  std::vector<Vector> states;   // s_0 .. s_T
  std::vector<Vector> actions;  // a_0 .. a_{T-1}
  std::vector<double> costs;    // l_0 .. l_{T-1}
};

struct TrainHistory {
  std::vector<EpisodeRecord> episodes;
};

// delta = cost + gamma V(s_next) - Q(s, a). Throws SolveFailure if one of
// the solves fails.
double td_error(MpcAgent& agent, const Transition& tr, double gamma);

struct UpdateResult {
  Vector theta;
  double mean_abs_td = 0.0;
  int used = 0;
  int dropped = 0;
};

// theta+ = theta + alpha * mean over usable samples of delta * grad Q.
// Samples whose solves or gradients fail are dropped and counted.
UpdateResult q_update(MpcAgent& agent, const std::vector<Transition>& batch,
                      double alpha, double gamma);

// Seed of episode `episode` derived from the run seed.
std::uint64_t episode_seed(std::uint64_t seed, int episode);

// Runs one episode with the current policy and no parameter updates.
EpisodeRecord rollout(Environment& env, MpcAgent& agent, const Vector& s0,
                      int steps, std::uint64_t seed, int episode_index = 0);

TrainHistory train(Environment& env, MpcAgent& agent,
                   const TrainConfig& config);

}  // namespace diffmpc
