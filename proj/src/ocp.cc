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

#include "diffmpc/ocp.hpp"

#include <optional>
#include <random>

namespace diffmpc {

Dims Dims::uniform(int nx, int nu, int n_theta, int N, int ng, int nh, int ns,
                   int nh_terminal, int ns_terminal) {
  Dims d;
  d.nx = nx;
  d.nu = nu;
  d.n_theta = n_theta;
  d.N = N;
  d.ng.assign(N, ng);
  d.nh.assign(N + 1, nh);
  d.ns.assign(N + 1, ns);
  d.nh[N] = nh_terminal;
  d.ns[N] = ns_terminal;
  return d;
}

std::vector<std::string> Dims::check() const {
  std::vector<std::string> out;
  if (nx < 0 || nu < 0 || n_theta < 0) out.push_back("negative dimension");
  if (N < 1) out.push_back("horizon N must be at least 1");
  if (N >= 1) {
    if (static_cast<int>(ng.size()) != N) {
      out.push_back("ng must have N entries");
    }
    if (static_cast<int>(nh.size()) != N + 1) {
      out.push_back("nh must have N + 1 entries");
    }
    if (static_cast<int>(ns.size()) != N + 1) {
      out.push_back("ns must have N + 1 entries");
    }
  }
  for (int v : ng) if (v < 0) out.push_back("negative ng entry");
  for (int v : nh) if (v < 0) out.push_back("negative nh entry");
  for (int v : ns) if (v < 0) out.push_back("negative ns entry");
  return out;
}

void ThetaRegistry::add(const std::string& name, int length) {
  if (index_.count(name)) {
    throw PreconditionError("theta slice '" + name + "' registered twice");
  }
  if (length < 0) throw DimensionError("negative theta slice length");
  index_[name] = static_cast<int>(order_.size());
  order_.push_back({name, Slice{size_, length}});
  size_ += length;
}

const ThetaRegistry::Slice& ThetaRegistry::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw PreconditionError("unknown theta slice '" + name + "'");
  }
  return order_[it->second].second;
}

bool ThetaRegistry::contains(const std::string& name) const {
  return index_.count(name) > 0;
}

void ParametricOcp::set_theta(const Vector& theta) {
  if (theta.size() != dims.n_theta) {
    throw DimensionError("theta has " + std::to_string(theta.size()) +
                         " entries, expected " + std::to_string(dims.n_theta));
  }
  theta_ = theta;
}

Vector ParametricOcp::theta_slice(const std::string& name) const {
  const auto& s = registry.at(name);
  return theta_.segment(s.offset, s.length);
}

ParametricOcp set_theta(ParametricOcp ocp, const Vector& theta) {
  ocp.set_theta(theta);
  return ocp;
}

namespace {

// Probes one callback over all stages it applies to; returns the first
// problem found.
std::optional<std::string> probe(const StageFunction& fn, int first, int last,
                                 const std::function<int(int)>& expected,
                                 const std::function<int(int)>& nz,
                                 const Vector& theta, std::mt19937_64& rng,
                                 bool theta_free, int nx, int nu) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int k = first; k <= last; ++k) {
    const int m = fn.rows(k);
    if (m != expected(k)) {
      return "stage " + std::to_string(k) + ": returns " + std::to_string(m) +
             " rows, expected " + std::to_string(expected(k));
    }
    Vector z(nz(k));
    for (int i = 0; i < z.size(); ++i) z[i] = dist(rng);
    Vector out(m);
    Matrix jac(m, z.size());
    Matrix tjac(m, theta.size());
    try {
      fn.eval(k, z, theta, out);
      fn.jacobian(k, z, theta, jac);
      fn.theta_jacobian(k, z, theta, tjac);
    } catch (const std::exception& e) {
      return "stage " + std::to_string(k) + ": threw '" + e.what() + "'";
    }
    if (!out.allFinite() || !jac.allFinite() || !tjac.allFinite()) {
      return "stage " + std::to_string(k) + ": non-finite output";
    }
    if (theta_free && tjac.size() > 0 && tjac.cwiseAbs().maxCoeff() > 0.0) {
      return "stage " + std::to_string(k) + ": depends on theta";
    }
    if (nu >= 0 && m > 0) {
      // Input-only function: no x or slack columns.
      double other = jac.leftCols(nx).cwiseAbs().sum() +
                     jac.rightCols(z.size() - nx - nu).cwiseAbs().sum();
      if (other > 0.0) {
        return "stage " + std::to_string(k) + ": reads x or sigma";
      }
    }
  }
  return std::nullopt;
}

}  // namespace

ValidationReport validate(const ParametricOcp& ocp, std::uint64_t seed) {
  ValidationReport report;
  const Dims& d = ocp.dims;
  for (const auto& msg : d.check()) report.mismatches.push_back("dims: " + msg);
  if (!report.ok()) return report;
  if (ocp.theta().size() != d.n_theta) {
    report.mismatches.push_back("theta: length " +
                                std::to_string(ocp.theta().size()) +
                                " differs from n_theta " +
                                std::to_string(d.n_theta));
    return report;
  }
  if (ocp.registry.size() != 0 && ocp.registry.size() != d.n_theta) {
    report.mismatches.push_back("theta registry covers " +
                                std::to_string(ocp.registry.size()) +
                                " entries, n_theta is " +
                                std::to_string(d.n_theta));
  }
  std::mt19937_64 rng(seed);
  const int N = d.N;
  auto nz = [&](int k) { return d.nz(k); };
  auto one = [](int) { return 1; };
  struct Entry {
    const char* name;
    const StageFunctionPtr* fn;
    int first, last;
    std::function<int(int)> rows;
    bool theta_free;
    bool input_only;
  };
  const std::vector<Entry> entries = {
      {"stage_cost", &ocp.stage_cost, 0, N - 1, one, false, false},
      {"slack_penalty", &ocp.slack_penalty, 0, N - 1, one, true, false},
      {"dynamics", &ocp.dynamics, 0, N - 1, [&](int) { return d.nx; }, false,
       false},
      {"input_constraint", &ocp.input_constraint, 0, N - 1,
       [&](int k) { return d.ng[k]; }, true, true},
      {"path_constraint", &ocp.path_constraint, 0, N - 1,
       [&](int k) { return d.nh[k]; }, false, false},
      {"terminal_cost", &ocp.terminal_cost, N, N, one, false, false},
      {"terminal_slack_penalty", &ocp.terminal_slack_penalty, N, N, one, true,
       false},
      {"terminal_constraint", &ocp.terminal_constraint, N, N,
       [&](int) { return d.nh[N]; }, false, false},
  };
  for (const auto& e : entries) {
    if (!*e.fn) {
      report.mismatches.push_back(std::string(e.name) + ": missing callback");
      continue;
    }
    auto msg = probe(**e.fn, e.first, e.last, e.rows, nz, ocp.theta(), rng,
                     e.theta_free, d.nx, e.input_only ? d.nu : -1);
    if (msg) report.mismatches.push_back(std::string(e.name) + ": " + *msg);
  }
  return report;
}

}  // namespace diffmpc
