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

#include "diffmpc/rl.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace diffmpc {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  if (capacity == 0) throw PreconditionError("buffer capacity must be >= 1");
}

void ReplayBuffer::push(Transition tr) {
  if (!tr.s.allFinite() || !tr.a.allFinite() || !tr.s_next.allFinite() ||
      !std::isfinite(tr.cost)) {
    throw DomainError("transition has non-finite entries");
  }
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(tr));
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n) {
  n = std::min(n, items_.size());
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates with our own draws keeps the stream portable.
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng_)]);
    out.push_back(items_[idx[i]]);
  }
  return out;
}

std::vector<Transition> ReplayBuffer::latest(std::size_t n) const {
  n = std::min(n, items_.size());
  return {items_.end() - static_cast<std::ptrdiff_t>(n), items_.end()};
}

void TrainConfig::check() const {
  if (episodes < 0) throw PreconditionError("episodes must be >= 0");
  if (steps_per_episode < 1) {
    throw PreconditionError("steps_per_episode must be >= 1");
  }
  // 0 is allowed: it turns training into a pure evaluation run.
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw PreconditionError("learning_rate must be finite and >= 0");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw PreconditionError("gamma must lie in (0, 1]");
  }
  if (batch_size < 1) throw PreconditionError("batch_size must be >= 1");
  if (buffer_capacity < 1) {
    throw PreconditionError("buffer_capacity must be >= 1");
  }
  if (max_consecutive_failures < 0) {
    throw PreconditionError("max_consecutive_failures must be >= 0");
  }
}

double td_error(MpcAgent& agent, const Transition& tr, double gamma) {
  const double q = agent.action_value(tr.s, tr.a).value;
  const double v = agent.value(tr.s_next).value;
  return tr.cost + gamma * v - q;
}

UpdateResult q_update(MpcAgent& agent, const std::vector<Transition>& batch,
                      double alpha, double gamma) {
  UpdateResult out;
  out.theta = agent.theta();
  if (batch.empty()) return out;
  Vector step = Vector::Zero(out.theta.size());
  double abs_td = 0.0;
  for (const Transition& tr : batch) {
    try {
      const double delta = td_error(agent, tr, gamma);
      const Vector g = agent.grad_q(tr.s, tr.a);
      if (!std::isfinite(delta) || !g.allFinite()) {
        ++out.dropped;
        continue;
      }
      step += delta * g;
      abs_td += std::abs(delta);
      ++out.used;
    } catch (const std::runtime_error& e) {
      spdlog::debug("q_update: dropping sample: {}", e.what());
      ++out.dropped;
    }
  }
  if (out.used == 0) return out;
  out.mean_abs_td = abs_td / out.used;
  out.theta = out.theta + alpha * (step / out.used);
  agent.set_theta(out.theta);
  return out;
}

std::uint64_t episode_seed(std::uint64_t seed, int episode) {
  // splitmix64 of the combined key
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (std::uint64_t(episode) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

struct StepOutcome {
  Transition tr;
  bool violation = false;
  bool failed = false;
};

StepOutcome policy_step(Environment& env, MpcAgent& agent) {
  StepOutcome o;
  o.tr.s = env.state();
  try {
    o.tr.a = agent.act(o.tr.s).a;
  } catch (const std::runtime_error& e) {
    spdlog::warn("policy evaluation failed, applying zero input: {}",
                 e.what());
    o.tr.a = Vector::Zero(env.action_dim());
    o.failed = true;
  }
  StepResult r = env.step(o.tr.a);
  o.tr.s_next = r.s_next;
  o.tr.cost = r.cost;
  o.violation = r.violation;
  return o;
}

void record(EpisodeRecord& rec, const StepOutcome& o) {
  rec.actions.push_back(o.tr.a);
  rec.costs.push_back(o.tr.cost);
  rec.states.push_back(o.tr.s_next);
  rec.cost += o.tr.cost;
  rec.violations += o.violation ? 1 : 0;
}

}  // namespace

EpisodeRecord rollout(Environment& env, MpcAgent& agent, const Vector& s0,
                      int steps, std::uint64_t seed, int episode_index) {
  EpisodeRecord rec;
  rec.episode = episode_index;
  rec.states.push_back(env.reset(s0, seed));
  for (int t = 0; t < steps; ++t) {
    StepOutcome o = policy_step(env, agent);
    if (o.failed) ++rec.dropped;
    record(rec, o);
  }
  rec.theta = agent.theta();
  return rec;
}

TrainHistory train(Environment& env, MpcAgent& agent,
                   const TrainConfig& config) {
  config.check();
  if (env.state_dim() != agent.ocp().dims.nx ||
      env.action_dim() != agent.ocp().dims.nu) {
    throw DimensionError("environment and agent dimensions differ");
  }
  TrainHistory hist;
  ReplayBuffer buffer(config.buffer_capacity, episode_seed(config.seed, -1));
  for (int ep = 1; ep <= config.episodes; ++ep) {
    EpisodeRecord rec;
    rec.episode = ep;
    rec.states.push_back(
        env.reset(config.initial_state, episode_seed(config.seed, ep)));
    std::vector<Transition> episode;
    int consecutive = 0;
    double td_sum = 0.0;
    int td_count = 0;
    for (int t = 0; t < config.steps_per_episode; ++t) {
      StepOutcome o = policy_step(env, agent);
      record(rec, o);
      if (o.failed) {
        ++rec.dropped;
        if (++consecutive > config.max_consecutive_failures) {
          spdlog::warn("episode {} aborted after {} consecutive failures", ep,
                       consecutive);
          rec.aborted = true;
          break;
        }
        continue;
      }
      buffer.push(o.tr);
      if (config.update_mode == UpdateMode::kPerStep) {
        UpdateResult u = q_update(agent, buffer.sample(config.batch_size),
                                  config.learning_rate, config.gamma);
        rec.dropped += u.dropped;
        consecutive = u.used > 0 ? 0 : consecutive + 1;
        if (u.used > 0) {
          td_sum += u.mean_abs_td;
          ++td_count;
        }
        if (consecutive > config.max_consecutive_failures) {
          rec.aborted = true;
          break;
        }
      } else {
        consecutive = 0;
        episode.push_back(o.tr);
      }
    }
    if (config.update_mode == UpdateMode::kEpisodeBatch) {
      UpdateResult u =
          q_update(agent, episode, config.learning_rate, config.gamma);
      rec.dropped += u.dropped;
      if (u.used > 0) {
        td_sum += u.mean_abs_td;
        ++td_count;
      }
    }
    rec.mean_abs_td = td_count > 0 ? td_sum / td_count : 0.0;
    rec.theta = agent.theta();
    spdlog::info("episode {}: cost {:.4f}, violations {}, mean |td| {:.4g}",
                 ep, rec.cost, rec.violations, rec.mean_abs_td);
    hist.episodes.push_back(std::move(rec));
  }
  return hist;
}

}  // namespace diffmpc
