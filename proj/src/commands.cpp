#include "dhinf/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dhinf/io.hpp"

namespace dhinf {

namespace fs = std::filesystem;

namespace {

const char* kVerifyMarker = "== verification ==";

std::string run_dir(const ScenarioConfig& cfg, const std::string& out) {
  if (!out.empty()) return out;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return "run";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Builds the model and the assumption section; returns false (with the reason
// in `os`) when the scenario cannot be used.
bool assumptions(const ScenarioConfig& cfg, std::ostream& os, std::optional<NetworkModel>& model) {
  os << "== assumptions ==\n";
  try {
    const CommGraph g = cfg.graph();
    const AssumptionReport r = check_assumptions(cfg.plant, cfg.nodes, g);
    os << "strongly_connected: " << (r.connected ? "pass" : "FAIL") << '\n';
    os << "balanced: " << (r.balanced ? "pass" : "FAIL") << '\n';
    for (std::size_t k = 0; k < r.controllable.size(); ++k) {
      os << "controllable[" << k + 1 << "]: " << (r.controllable[k] ? "pass" : "FAIL") << " (rank "
         << r.controllability_rank[k] << " of " << cfg.plant.n() << ")\n";
    }
    if (!r.passed()) {
      if (!(r.connected && r.balanced) || !cfg.padding) return false;
      const ScenarioConfig padded = cfg.padded();
      const AssumptionReport p = check_assumptions(padded.plant, padded.nodes, g);
      os << "padding: eps = " << *cfg.padding << ", controllable after padding: "
         << (p.all_controllable() ? "pass" : "FAIL") << '\n';
      if (!p.passed()) return false;
    }
    model = cfg.model();
  } catch (const DegenerateNoiseError& e) {
    os << "noise_covariance: FAIL (" << e.what() << ")\n";
    return false;
  } catch (const std::invalid_argument& e) {
    os << "model: FAIL (" << e.what() << ")\n";
    return false;
  }
  return true;
}

void gains_section(std::ostream& os, const Gains& g) {
  os << "== gains ==\n" << std::setprecision(6);
  os << "beta: " << g.beta << '\n';
  for (std::size_t k = 0; k < g.K.size(); ++k) {
    os << "K" << k + 1 << " (Frobenius " << g.K[k].norm() << "):\n" << g.K[k] << '\n';
    os << "L" << k + 1 << ":\n" << g.L[k] << '\n';
  }
  os << "P:\n" << g.P.mat() << '\n';
}

}  // namespace

void apply_beta_option(SynthesisConfig& s, const std::string& beta) {
  if (beta.empty()) return;
  if (beta == "opt") {
    s.fixed_beta.reset();
    return;
  }
  const std::string prefix = "fixed:";
  if (beta.rfind(prefix, 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string v = beta.substr(prefix.size());
      s.fixed_beta = std::stod(v, &used);
      if (used == v.size()) return;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError(0, "--beta expects 'fixed:<value>' or 'opt', got '" + beta + "'");
}

int cmd_check(const ScenarioConfig& cfg, std::ostream& log) {
  std::ostringstream os;
  std::optional<NetworkModel> model;
  const bool ok = assumptions(cfg, os, model);
  os << "result: " << (ok ? "pass" : "FAIL") << '\n';
  log << os.str();
  return ok ? kExitOk : kExitValidation;
}

int cmd_synth(const ScenarioConfig& cfg_in, const SynthRequest& req, std::ostream& log) {
  ScenarioConfig cfg = cfg_in;
  apply_beta_option(cfg.synthesis, req.beta);
  if (req.max_iter) cfg.synthesis.max_iter = *req.max_iter;
  const fs::path dir = run_dir(cfg, req.out);
  fs::create_directories(dir);

  std::ostringstream os;
  os << "scenario: " << cfg.name << '\n';
  std::optional<NetworkModel> model;
  if (!assumptions(cfg, os, model)) {
    os << "result: FAIL (assumptions)\n";
    write_text(dir / "report.txt", os.str());
    log << os.str();
    return kExitValidation;
  }
  const SynthesisConfig& s = cfg.synthesis;
  const bool central = req.mode == SynthRequest::Mode::Central;
  os << "== synthesis ==\n";
  os << "mode: " << (central ? "central" : "distributed") << '\n';
  os << "beta: " << (s.fixed_beta ? "fixed " + std::to_string(*s.fixed_beta) : std::string("optimized"))
     << '\n';
  os << std::setprecision(10);

  int code = kExitOk;
  Gains gains;
  std::vector<SymMat> X;
  std::vector<Mat> F;
  if (central) {
    const CentralizedResult r = solve_centralized(*model, s.lmi, s.fixed_beta, s.solver);
    const CentralizedProblem cp = centralized_problem(*model, s.lmi, r.beta);
    Vec x = Vec::Zero(cp.layout.size());
    for (int k = 1; k <= model->size(); ++k) {
      cp.layout.insert(x, x_name(k), r.X[k - 1].mat());
      cp.layout.insert(x, f_name(k), r.F[k - 1]);
    }
    const FeasibilityReport fr = check_feasible(x, cp.problem, s.solver.feas_tol);
    os << "solver_status: " << to_string(r.solution.status) << '\n';
    os << "beta_central: " << r.beta << '\n';
    if (!s.fixed_beta) os << "beta_upper: " << r.beta_upper << '\n';
    os << "worst_violation: " << fr.worst_violation << '\n';
    if (!fr.ok) {
      const std::string where =
          fr.worst_block >= 0 ? cp.problem.blocks[fr.worst_block].label : std::string("bounds");
      os << "result: INFEASIBLE (worst inequality " << where << ")\n";
      write_text(dir / "report.txt", os.str());
      log << os.str();
      return kExitInfeasible;
    }
    X = r.X;
    F = r.F;
    gains = extract_gains(X, F, *model);
    gains.beta = r.beta;
  } else {
    DistributedOptions opts = s.distributed_options();
    opts.log_messages = req.messages;
    DistributedSolver solver(*model, opts);
    DistributedResult res;
    try {
      res = solver.run();
    } catch (const InitError& e) {
      os << "result: INFEASIBLE (" << e.what() << ")\n";
      write_text(dir / "report.txt", os.str());
      log << os.str();
      return kExitInfeasible;
    }
    {
      std::ofstream t(dir / "trace.csv");
      res.trace.write_csv(t, !req.wall_time);
    }
    if (req.messages) {
      std::ofstream m(dir / "messages.csv");
      res.messages.write_csv(m);
    }
    const auto& last = res.trace.records.back();
    int flagged = 0;
    double worst = -1e300;
    for (const auto& r : res.trace.records) {
      flagged += static_cast<int>(r.flagged.size());
      worst = std::max(worst, r.max_feas_violation);
    }
    os << "iterations: " << res.trace.size() << '\n';
    os << "converged: " << (res.converged ? "yes" : "no") << '\n';
    os << "final_error: " << last.error << '\n';
    os << "beta_ave: " << last.beta_ave << '\n';
    os << "max_feas_violation: " << worst << '\n';
    os << "flagged_local_solves: " << flagged << '\n';
    for (const auto& v : res.vars) {
      X.push_back(v.X.at(v.node));
      F.push_back(v.F);
    }
    gains = res.gains;
    if (worst > s.solver.feas_tol) code = kExitInfeasible;
  }
  bool bounds_ok = true;
  for (std::size_t k = 0; k < X.size(); ++k) {
    const BoundCheck b = theorem1_bounds(X[k], F[k], s.lmi.rho);
    bounds_ok = bounds_ok && b.ok;
    os << "gain_bound[" << k + 1 << "]: " << (b.ok ? "pass" : "FAIL") << " (" << b.f_norm << " < " << b.bound
       << ")\n";
  }
  save_gains((dir / "gains").string(), gains);
  gains_section(os, gains);
  os << "result: " << (code == kExitOk && bounds_ok ? "pass" : "FAIL") << '\n';
  write_text(dir / "report.txt", os.str());
  log << os.str();
  if (code == kExitOk && !bounds_ok) code = kExitValidation;
  return code;
}

int cmd_verify(const ScenarioConfig& cfg, const std::string& gains_dir, const std::string& out_dir,
               std::ostream& log) {
  const fs::path dir = out_dir.empty() ? fs::path(gains_dir).parent_path() : fs::path(out_dir);
  std::optional<NetworkModel> model;
  std::ostringstream pre;
  if (!assumptions(cfg, pre, model)) {
    log << pre.str() << "result: FAIL (assumptions)\n";
    return kExitValidation;
  }
  Gains gains;
  try {
    gains = load_gains(gains_dir, *model);
  } catch (const std::exception& e) {
    log << "gains: FAIL (" << e.what() << ")\n";
    return kExitValidation;
  }
  fs::create_directories(dir);
  const SimulationConfig& sim = cfg.simulation;

  std::ostringstream os;
  os << kVerifyMarker << '\n' << std::setprecision(10);
  bool ok = true;

  const auto decay = decay_checks(*model, gains, sim.decay_count, sim.decay_horizon, sim.decay_factor,
                                  cfg.seed + ScenarioConfig::decay_seed_offset, sim.dt);
  {
    std::ofstream f(dir / "decay.csv");
    f << "run,x0_norm,worst_ratio,pass\n" << std::setprecision(17);
    double worst = 0.0;
    for (std::size_t i = 0; i < decay.size(); ++i) {
      f << i + 1 << ',' << decay[i].x0.norm() << ',' << decay[i].worst_ratio << ',' << decay[i].pass << '\n';
      ok = ok && decay[i].pass;
      worst = std::max(worst, decay[i].worst_ratio);
    }
    os << "decay: " << (std::all_of(decay.begin(), decay.end(), [](const auto& d) { return d.pass; }) ? "pass"
                                                                                                       : "FAIL")
       << " (max ||e_k(" << sim.decay_horizon << ")|| / ||x0|| = " << worst << ", limit " << sim.decay_factor
       << ")\n";
  }

  BatterySpec spec = cfg.battery();
  std::vector<BatteryRun> runs;
  try {
    runs = run_battery(*model, gains, spec);
  } catch (const SimulationError& e) {
    log << "simulation: FAIL (" << e.what() << ")\n";
    return kExitRuntime;
  }
  {
    std::ofstream f(dir / "battery.csv");
    f << "run,seed,consensus_ratio,error_ratio,denominator,gamma,pass\n" << std::setprecision(17);
    double worst = 0.0;
    bool all = true;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& m = runs[i].metrics;
      const bool pass = m.consensus_ratio <= sim.margin * m.gamma;
      f << i + 1 << ',' << runs[i].seed << ',' << m.consensus_ratio << ',' << m.error_ratio << ','
        << m.denominator << ',' << m.gamma << ',' << pass << '\n';
      all = all && pass;
      worst = std::max(worst, m.consensus_ratio);
    }
    ok = ok && all;
    os << "hinf_battery: " << (all ? "pass" : "FAIL") << " (max consensus_ratio " << worst << ", bound "
       << sim.margin << "/beta = " << sim.margin / gains.beta << ")\n";
  }

  if (!runs.empty()) {
    Scenario s;
    s.model = &*model;
    s.gains = gains;
    s.x0 = runs[0].x0;
    s.horizon = sim.horizon;
    s.dt = sim.dt;
    s.stride = std::max(1, static_cast<int>(std::llround(0.1 / sim.dt)));
    s.disturbances = disturbance_signals(*model, sim.xi, sim.eta, sim.horizon, runs[0].seed);
    const SimulationTrace tr = integrate(s);
    std::ofstream f(dir / "trajectory.csv");
    tr.write_csv(f, s.x0.dot(gains.P.mat() * s.x0));
  }
  os << "result: " << (ok ? "pass" : "FAIL") << '\n';

  // Keep the synthesis part of an existing report and replace the
  // verification section.
  std::string report = fs::exists(dir / "report.txt") ? read_text(dir / "report.txt") : std::string();
  const auto cut = report.find(kVerifyMarker);
  if (cut != std::string::npos) report.resize(cut);
  write_text(dir / "report.txt", report + os.str());
  log << os.str();
  return ok ? kExitOk : kExitValidation;
}

int cmd_export_figures(const std::string& trace_dir, std::ostream& log) {
  const fs::path path = fs::path(trace_dir) / "trace.csv";
  std::ifstream in(path);
  if (!in) {
    log << "no trace.csv in " << trace_dir << '\n';
    return kExitValidation;
  }
  std::string header;
  std::getline(in, header);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() < 3) {
      log << "malformed row in " << path.string() << '\n';
      return kExitValidation;
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) {
    log << path.string() << " has no iterations\n";
    return kExitValidation;
  }
  {
    std::ofstream f(fs::path(trace_dir) / "fig1.csv");
    f << "iteration,error\n";
    for (const auto& r : rows) f << r[0] << ',' << r[1] << '\n';
  }
  const bool varies = std::any_of(rows.begin(), rows.end(), [&](const auto& r) { return r[2] != rows[0][2]; });
  if (varies) {
    std::ofstream f(fs::path(trace_dir) / "fig2.csv");
    f << "iteration,error,beta_ave\n";
    for (const auto& r : rows) f << r[0] << ',' << r[1] << ',' << r[2] << '\n';
  }
  log << "wrote fig1.csv" << (varies ? " and fig2.csv" : "") << " (" << rows.size() << " iterations)\n";
  return kExitOk;
}

}  // namespace dhinf
