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

#include "diffmpc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "diffmpc/agent.hpp"
#include "diffmpc/envs.hpp"
#include "diffmpc/sensitivity.hpp"

namespace diffmpc {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown(const json& j, const std::string& where,
                    const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
void read(const json& j, const char* key, const std::string& where, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

void read_vec(const json& j, const char* key, const std::string& where,
              int size, Eigen::Ref<Eigen::VectorXd> out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  std::vector<double> v;
  read(j, key, where, v);
  if (static_cast<int>(v.size()) != size) {
    throw ConfigError(where + "." + key + " must have " +
                      std::to_string(size) + " entries");
  }
  for (int i = 0; i < size; ++i) out(i) = v[i];
}

void parse_solver(const json& j, SolverSettings& s) {
  const std::string w = "solver";
  reject_unknown(j, w,
                 {"kkt_tol", "tau_min", "tau_decrease", "max_ip_iters",
                  "max_sqp_iters", "hessian_mode", "reg_eps",
                  "fraction_to_boundary"});
  read(j, "kkt_tol", w, s.kkt_tol);
  read(j, "tau_min", w, s.tau_min);
  read(j, "tau_decrease", w, s.tau_decrease);
  read(j, "max_ip_iters", w, s.max_ip_iters);
  read(j, "max_sqp_iters", w, s.max_sqp_iters);
  read(j, "reg_eps", w, s.reg_eps);
  read(j, "fraction_to_boundary", w, s.fraction_to_boundary);
  std::string mode;
  read(j, "hessian_mode", w, mode);
  if (mode == "exact") {
    s.hessian_mode = HessianMode::kExact;
  } else if (mode == "gauss_newton") {
    s.hessian_mode = HessianMode::kGaussNewton;
  } else if (mode == "regularized") {
    s.hessian_mode = HessianMode::kRegularized;
  } else if (!mode.empty()) {
    throw ConfigError("solver.hessian_mode must be exact, gauss_newton or "
                      "regularized");
  }
}

void parse_mpc(const json& j, LtiOcpConfig& c) {
  const std::string w = "mpc";
  reject_unknown(j, w, {"horizon", "gamma", "w", "lb", "ub", "u_min", "u_max"});
  read(j, "horizon", w, c.N);
  read(j, "gamma", w, c.gamma);
  read_vec(j, "w", w, 2, c.w);
  read_vec(j, "lb", w, 2, c.lb);
  read_vec(j, "ub", w, 2, c.ub);
  read(j, "u_min", w, c.u_min);
  read(j, "u_max", w, c.u_max);
  if (c.N < 1) throw ConfigError("mpc.horizon must be >= 1");
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) {
    throw ConfigError("mpc.gamma must lie in (0, 1]");
  }
  if (!(c.u_min < c.u_max)) throw ConfigError("mpc.u_min must be < u_max");
}

void parse_train(const json& j, TrainConfig& c) {
  const std::string w = "train";
  reject_unknown(j, w,
                 {"episodes", "steps_per_episode", "learning_rate", "gamma",
                  "update_mode", "batch_size", "buffer_capacity",
                  "initial_state", "max_consecutive_failures"});
  read(j, "episodes", w, c.episodes);
  read(j, "steps_per_episode", w, c.steps_per_episode);
  read(j, "learning_rate", w, c.learning_rate);
  read(j, "gamma", w, c.gamma);
  read(j, "batch_size", w, c.batch_size);
  read(j, "buffer_capacity", w, c.buffer_capacity);
  read(j, "max_consecutive_failures", w, c.max_consecutive_failures);
  read_vec(j, "initial_state", w, 2, c.initial_state);
  std::string mode;
  read(j, "update_mode", w, mode);
  if (mode == "per_step") {
    c.update_mode = UpdateMode::kPerStep;
  } else if (mode == "episode_batch") {
    c.update_mode = UpdateMode::kEpisodeBatch;
  } else if (!mode.empty()) {
    throw ConfigError("train.update_mode must be per_step or episode_batch");
  }
}

void parse_bench(const json& j, BenchConfig& c) {
  const std::string w = "bench";
  reject_unknown(j, w,
                 {"mass_counts", "repetitions", "warmup", "mass_increment",
                  "fd_step", "agreement_tol", "horizon", "dt", "u_max",
                  "q_weight", "r_weight"});
  read(j, "mass_counts", w, c.mass_counts);
  read(j, "repetitions", w, c.repetitions);
  read(j, "warmup", w, c.warmup);
  read(j, "mass_increment", w, c.mass_increment);
  read(j, "fd_step", w, c.fd_step);
  read(j, "agreement_tol", w, c.agreement_tol);
  read(j, "horizon", w, c.ocp.N);
  read(j, "dt", w, c.dt);
  read(j, "u_max", w, c.ocp.u_max);
  read(j, "q_weight", w, c.ocp.q_weight);
  read(j, "r_weight", w, c.ocp.r_weight);
  if (c.ocp.N < 1) throw ConfigError("bench.horizon must be >= 1");
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << std::setprecision(17);
  return os;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create " + dir.string() + ": " +
                             ec.message());
  }
}

void write_episode_csv(const fs::path& path, const EpisodeRecord& rec) {
  std::ofstream os = open_out(path);
  os << kEpisodeCsvHeader << '\n';
  for (std::size_t k = 0; k < rec.states.size(); ++k) {
    const Vector& x = rec.states[k];
    os << k << ',' << x(0) << ',' << x(1) << ',';
    if (k < rec.actions.size()) {
      os << rec.actions[k](0) << ',' << rec.costs[k];
    } else {
      os << "nan,nan";
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

void write_data_row(std::ostream& os, const ThetaRegistry& reg,
                    const EpisodeRecord& rec) {
  auto slice = [&](const char* name) {
    const auto& s = reg.at(name);
    return rec.theta.segment(s.offset, s.length);
  };
  const Vector B = slice("B"), b = slice("b"), f = slice("f");
  os << rec.episode << ',' << B(0) << ',' << B(1) << ',' << b(0) << ','
     << b(1) << ',' << f(0) << ',' << f(1) << ',' << f(2) << ','
     << slice("V_0")(0) << ',' << rec.cost << '\n';
}

json theta_json(const ThetaRegistry& reg, const Vector& initial,
                const std::vector<const EpisodeRecord*>& recs) {
  json j;
  json slices = json::array();
  for (const auto& [name, s] : reg.slices()) {
    slices.push_back({{"name", name}, {"offset", s.offset},
                      {"length", s.length}});
  }
  j["slices"] = slices;
  j["initial"] = std::vector<double>(initial.data(),
                                     initial.data() + initial.size());
  json eps = json::array();
  for (const EpisodeRecord* r : recs) {
    eps.push_back(
        {{"episode", r->episode},
         {"theta", std::vector<double>(r->theta.data(),
                                       r->theta.data() + r->theta.size())}});
  }
  j["episodes"] = eps;
  return j;
}

LtiEnv make_env(const LtiOcpConfig& mpc) {
  LtiEnv::Params p;
  p.lb = mpc.lb;
  p.ub = mpc.ub;
  p.w = mpc.w;
  p.u_min = mpc.u_min;
  p.u_max = mpc.u_max;
  return LtiEnv(p);
}

// ---- check suites ----

struct SuiteResult {
  std::string name;
  bool pass = true;
  std::vector<std::string> lines;

  void expect(bool ok, const std::string& what, double value, double tol) {
    std::ostringstream os;
    os << (ok ? "  ok   " : "  FAIL ") << what << ": " << std::scientific
       << std::setprecision(3) << value << " (tol " << tol << ")";
    lines.push_back(os.str());
    pass = pass && ok;
  }
};

double rel(const Matrix& a, const Matrix& b) { return relative_error(a, b); }

SuiteResult bellman_suite(const RunConfig& cfg, const CheckOptions& opt) {
  SuiteResult r{"Bellman", true, {}};
  MpcAgent agent(make_lti_ocp(cfg.mpc), cfg.lti_solver);
  const double sign = opt.inject_sign_error ? -1.0 : 1.0;
  const std::vector<Vector> states = {Vector::Constant(2, 0.5),
                                      (Vector(2) << 0.2, -0.3).finished(),
                                      (Vector(2) << 0.9, 0.1).finished()};
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Vector& s = states[i];
    const double v = agent.value(s).value;
    const Vector a = agent.act(s).a;
    const Vector gv = sign * agent.grad_v(s);
    const double q = agent.action_value(s, a).value;
    const Vector gq = agent.grad_q(s, a);
    const std::string tag = "s" + std::to_string(i);
    const double dv = std::abs(v - q) / std::max(1.0, std::abs(v));
    r.expect(dv <= 1e-6, tag + " |V - Q(pi)|", dv, 1e-6);
    const double dg = rel(gv, gq);
    r.expect(dg <= 1e-5, tag + " grad V vs grad Q(pi)", dg, 1e-5);
    for (double da : {-0.05, 0.05}) {
      Vector a2 = a.array() + da;
      if (a2(0) <= cfg.mpc.u_min || a2(0) >= cfg.mpc.u_max) continue;
      const double q2 = agent.action_value(s, a2).value;
      const double gap = v - q2;  // must be <= 0
      r.expect(gap <= 1e-6, tag + " V - Q(pi + " + std::to_string(da) + ")",
               gap, 1e-6);
    }
  }
  return r;
}

SuiteResult fd_suite(const RunConfig& cfg, const CheckOptions& opt) {
  SuiteResult r{"FD-gradient", true, {}};
  // The barrier value differs from the tau = 0 value by O(sqrt(tau)) in
  // the derivative when a constraint is weakly active (the LTI tail sits on
  // x_0 >= 0), so the value oracle runs at a much smaller tau.
  SolverSettings settings = cfg.lti_solver;
  settings.kkt_tol = std::min(settings.kkt_tol, 1e-10);
  settings.tau_min = std::min(settings.tau_min, 1e-12);
  const ParametricOcp ocp = make_lti_ocp(cfg.mpc);
  MpcAgent agent(ocp, settings);
  const double sign = opt.inject_sign_error ? -1.0 : 1.0;
  const Vector s = Vector::Constant(2, 0.5);
  const Vector theta0 = ocp.theta();

  const Vector gv = sign * agent.grad_v(s);
  const double h = 1e-5;
  Vector fd(theta0.size());
  for (int i = 0; i < theta0.size(); ++i) {
    Vector tp = theta0, tm = theta0;
    tp(i) += h;
    tm(i) -= h;
    agent.set_theta(tp);
    const double vp = agent.value(s).value;
    agent.set_theta(tm);
    const double vm = agent.value(s).value;
    fd(i) = (vp - vm) / (2 * h);
  }
  agent.set_theta(theta0);
  const double ev = rel(gv, fd);
  r.expect(ev <= 1e-4, "grad V vs central differences", ev, 1e-4);

  const SolveResult sol = agent.value(s).solution;
  const Matrix gpi = sign * policy_gradient(ocp, sol).grad_pi;
  const Matrix fpi = fd_policy_gradient(ocp, sol, 1e-6, settings);
  const double ep = rel(gpi, fpi);
  r.expect(ep <= 1e-4, "grad pi vs forward differences", ep, 1e-4);
  return r;
}

void residual_case(SuiteResult& r, const std::string& tag,
                   const ParametricOcp& ocp, const SolveResult& sol,
                   const CheckOptions& opt) {
  const double sign = opt.inject_sign_error ? -1.0 : 1.0;
  SensitivityOptions so;
  so.residual_check = false;
  so.method = GradientMethod::kStructured;
  const Matrix ys = solution_sensitivity(ocp, sol, so).dy_dtheta;
  so.method = GradientMethod::kDense;
  const Matrix yd = solution_sensitivity(ocp, sol, so).dy_dtheta;
  const double rs = ift_residual(ocp, sol, sign * ys);
  const double rd = ift_residual(ocp, sol, sign * yd);
  r.expect(rs <= 1e-6, tag + " structured residual", rs, 1e-6);
  r.expect(rd <= 1e-6, tag + " dense residual", rd, 1e-6);
  const double agree = rel(ys, yd);
  r.expect(agree <= 1e-6, tag + " structured vs dense", agree, 1e-6);
}

SuiteResult residual_suite(const RunConfig& cfg, const CheckOptions& opt) {
  SuiteResult r{"IFT-residual", true, {}};
  const ParametricOcp lti = make_lti_ocp(cfg.mpc);
  const Vector s = Vector::Constant(2, 0.5);
  const SolveResult sv =
      sqp_solve(lti, s, std::nullopt, std::nullopt, cfg.lti_solver);
  if (!sv.info.converged()) throw SolveFailure(sv.info, "check: LTI V solve");
  residual_case(r, "lti V", lti, sv, opt);
  const Vector a = sv.point.u[0];
  const SolveResult sq = sqp_solve(lti, s, a, sv.point, cfg.lti_solver);
  if (!sq.info.converged()) throw SolveFailure(sq.info, "check: LTI Q solve");
  residual_case(r, "lti Q", lti, sq, opt);

  ChainMassParams params = ChainMassParams::defaults(3);
  params.dt = cfg.bench.dt;
  const ChainMassProblem cm = make_chain_mass_ocp(params, cfg.bench.ocp);
  const SolveResult sc = sqp_solve(cm.ocp, cm.x0, std::nullopt, std::nullopt,
                                   cfg.bench.solver);
  if (!sc.info.converged()) {
    throw SolveFailure(sc.info, "check: chain-mass solve");
  }
  residual_case(r, "chain n=3", cm.ocp, sc, opt);
  return r;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  RunConfig c;
  reject_unknown(j, "config",
                 {"example", "output_dir", "seed", "solver", "mpc", "train",
                  "bench"});
  read(j, "example", "config", c.example);
  if (c.example != "lti_qlearning" && c.example != "chain_mass_bench") {
    throw ConfigError("example must be lti_qlearning or chain_mass_bench");
  }
  read(j, "output_dir", "config", c.output_dir);
  read(j, "seed", "config", c.train.seed);
  if (j.contains("solver")) {
    parse_solver(j["solver"], c.example == "chain_mass_bench" ? c.bench.solver
                                                              : c.lti_solver);
  }
  if (j.contains("mpc")) parse_mpc(j["mpc"], c.mpc);
  if (j.contains("train")) parse_train(j["train"], c.train);
  if (j.contains("bench")) parse_bench(j["bench"], c.bench);
  try {
    c.lti_solver.check();
    c.train.check();
    c.bench.check();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str());
}

int cmd_train(const RunConfig& cfg) {
  if (cfg.example != "lti_qlearning") {
    throw ConfigError("train needs example lti_qlearning");
  }
  const fs::path out(cfg.output_dir);
  make_dir(out);
  MpcAgent agent(make_lti_ocp(cfg.mpc), cfg.lti_solver);
  LtiEnv env = make_env(cfg.mpc);
  const ThetaRegistry& reg = agent.ocp().registry;
  const Vector theta0 = agent.theta();

  std::ofstream data = open_out(out / "data.csv");
  data << kDataCsvHeader << '\n';
  std::vector<const EpisodeRecord*> recs;
  EpisodeRecord rec0;
  TrainHistory hist;
  if (cfg.train.episodes > 0) {
    rec0 = rollout(env, agent, cfg.train.initial_state,
                   cfg.train.steps_per_episode,
                   episode_seed(cfg.train.seed, 0), 0);
    spdlog::info("episode 0 (evaluation): cost {:.4f}, violations {}",
                 rec0.cost, rec0.violations);
    hist = train(env, agent, cfg.train);
    recs.push_back(&rec0);
    for (const auto& r : hist.episodes) recs.push_back(&r);
  }
  for (const EpisodeRecord* r : recs) {
    write_episode_csv(out / ("episode_" + std::to_string(r->episode) + ".csv"),
                      *r);
    write_data_row(data, reg, *r);
  }
  if (!data) throw std::runtime_error("write failed: data.csv");
  std::ofstream tj = open_out(out / "theta.json");
  tj << theta_json(reg, theta0, recs).dump(2) << '\n';
  return 0;
}

int cmd_bench(const RunConfig& cfg) {
  const fs::path out(cfg.output_dir);
  make_dir(out);
  // Open both files before the (long) run so an unwritable target fails fast.
  std::ofstream timings = open_out(out / "timings.csv");
  std::ofstream detail = open_out(out / "timings_detail.csv");
  const std::vector<TimingRow> rows = run_bench(cfg.bench);
  write_timings_csv(timings, rows);
  write_detail_csv(detail, rows);
  write_timings_csv(std::cout, rows);
  bool ok = true;
  for (const auto& r : rows) ok = ok && r.ok;
  return ok ? 0 : 1;
}

int cmd_check(const RunConfig& cfg, const CheckOptions& opt,
              std::ostream& os) {
  std::vector<SuiteResult> results;
  using Suite = SuiteResult (*)(const RunConfig&, const CheckOptions&);
  const std::pair<const char*, Suite> suites[] = {
      {"Bellman", bellman_suite},
      {"FD-gradient", fd_suite},
      {"IFT-residual", residual_suite}};
  for (const auto& [name, fn] : suites) {
    try {
      results.push_back(fn(cfg, opt));
    } catch (const std::exception& e) {
      SuiteResult r{name, false, {std::string("  FAIL exception: ") + e.what()}};
      results.push_back(r);
    }
  }
  bool all = true;
  for (const auto& r : results) {
    os << (r.pass ? "PASS " : "FAIL ") << r.name << '\n';
    for (const auto& l : r.lines) os << l << '\n';
    all = all && r.pass;
  }
  os << (all ? "all suites passed" : "some suites failed") << '\n';
  return all ? 0 : 1;
}

int run_cli(int argc, char** argv) {
  auto logger = spdlog::get("diffmpc");
  if (!logger) logger = spdlog::stderr_color_mt("diffmpc");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("DIFFMPC_LOG")) {
    spdlog::set_level(spdlog::level::from_str(lvl));
  }

  CLI::App app{"Differentiable MPC: Q-learning, sensitivities, benchmarks"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool inject = false;

  auto* train = app.add_subcommand("train", "Q-learning on the LTI example");
  train->add_option("--config", config_path, "JSON run configuration");
  train->add_option("--out", out_dir, "output directory");
  auto* seed_opt = train->add_option("--seed", seed, "run seed");

  auto* bench = app.add_subcommand("bench", "policy-gradient timings");
  bench->add_option("--config", config_path, "JSON run configuration");
  bench->add_option("--out", out_dir, "output directory");

  auto* check = app.add_subcommand("check", "gradient and Bellman checks");
  check->add_option("--config", config_path, "JSON run configuration");
  check->add_flag("--inject-sign-error", inject,
                  "negate analytic gradients (the checks must fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (*train) {
      if (seed_opt->count() > 0) cfg.train.seed = seed;
      return cmd_train(cfg);
    }
    if (*bench) {
      if (config_path.empty()) cfg.example = "chain_mass_bench";
      return cmd_bench(cfg);
    }
    return cmd_check(cfg, CheckOptions{inject}, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace diffmpc
