#include <set>
#include <sstream>

#include "doctest.h"
#include "dhinf/config.hpp"
#include "dhinf/distributed.hpp"
#include "oracles.hpp"

using namespace dhinf;

namespace {

const NetworkModel& reference_model() {
  static const NetworkModel m = reference_scenario().model();
  return m;
}

DistributedOptions reference_options() { return reference_scenario().synthesis.distributed_options(); }

NetworkModel two_node_model() {
  ScenarioConfig cfg = toy_scenario();
  cfg.nodes.resize(2);
  cfg.node_count = 2;
  cfg.edges = {{1, 2}, {2, 1}};
  return cfg.model();
}

NetworkModel single_node_model() {
  ScenarioConfig cfg = toy_scenario();
  cfg.nodes.resize(1);
  cfg.node_count = 1;
  cfg.edges.clear();
  return cfg.model();
}

LocalVars uniform_vars(int node, int N, const SymMat& X, double beta) {
  LocalVars v;
  v.node = node;
  v.F = Mat::Zero(X.dim(), X.dim());
  v.beta = beta;
  for (int j = 1; j <= N; ++j) v.X[j] = X;
  return v;
}

Multipliers zero_multipliers(int N, int n) {
  Multipliers m;
  m.lambda = 0.0;
  for (int j = 1; j <= N; ++j) m.Lambda[j] = SymMat(n);
  return m;
}

}  // namespace

TEST_CASE("consensus averaging") {
  const CommGraph g = CommGraph::directed_cycle(6);
  std::vector<Vec> same(6, Vec::Constant(3, 1.25));
  for (const auto& p : {ConsensusProtocol::exact(), ConsensusProtocol::linear(200, 0.4)}) {
    const ConsensusResult r = consensus_average(same, g, p);
    for (const auto& v : r.values) CHECK((v - same[0]).cwiseAbs().maxCoeff() <= 1e-15);
  }

  std::vector<Vec> ramp;
  for (int k = 1; k <= 6; ++k) ramp.push_back(Vec::Constant(1, k));
  const ConsensusResult ex = consensus_average(ramp, g, ConsensusProtocol::exact());
  for (const auto& v : ex.values) CHECK(v(0) == 3.5);

  const ConsensusResult lin = consensus_average(ramp, g, ConsensusProtocol::linear(200, 0.4));
  CHECK(lin.max_deviation < 1e-6);
  // Direct iteration of the same update as a reference.
  std::vector<double> x{1, 2, 3, 4, 5, 6};
  for (int r = 0; r < 200; ++r) {
    std::vector<double> y = x;
    for (int k = 0; k < 6; ++k) y[k] += 0.4 * (x[(k + 5) % 6] - x[k]);
    x = y;
  }
  for (int k = 0; k < 6; ++k) CHECK(lin.values[k](0) == doctest::Approx(x[k]).epsilon(1e-12));

  MessageLog log;
  consensus_average(ramp, g, ConsensusProtocol::linear(5, 0.4), &log);
  CHECK(log.entries().size() == 5 * 6);
  CHECK(log.non_local(g).empty());

  const CommGraph star(3, {{1, 2}, {1, 3}});
  CHECK_THROWS_AS(consensus_average(std::vector<Vec>(3, Vec::Zero(1)), star, ConsensusProtocol::linear(10, 0.4)),
                  ConsensusError);
  CHECK_THROWS_AS(consensus_average(std::vector<Vec>(3, Vec::Zero(1)), star, ConsensusProtocol::exact()),
                  ConsensusError);
}

TEST_CASE("copy and holder sets") {
  const NetworkModel& m = reference_model();
  CHECK(copy_set(m, 1, CopyMode::Full) == std::vector<int>{1, 2, 3, 4, 5, 6});
  CHECK(holder_set(m, 3, CopyMode::Full).size() == 6);
  const NetworkModel toy = toy_scenario().model();
  CHECK(copy_set(toy, 1, CopyMode::Neighborhood) == std::vector<int>{1, 2, 3});
}

TEST_CASE("fusion step") {
  const NetworkModel two = two_node_model();
  DistributedOptions opts;
  std::vector<LocalVars> vars{uniform_vars(1, 2, SymMat::identity(2), 1.0), uniform_vars(2, 2, SymMat::identity(2), 3.0)};
  std::vector<Multipliers> mult{zero_multipliers(2, 2), zero_multipliers(2, 2)};
  auto f = fusion_step(two, vars, mult, 1.0, opts);
  CHECK(f[0].beta_tilde == 2.0);
  CHECK(f[1].beta_tilde == 2.0);

  const NetworkModel& m = reference_model();
  std::mt19937_64 rng(47);
  const SymMat Xs(oracle::random_psd(rng, 6));
  std::vector<LocalVars> same;
  std::vector<Multipliers> zero;
  for (int k = 1; k <= 6; ++k) {
    same.push_back(uniform_vars(k, 6, Xs, 100.0));
    zero.push_back(zero_multipliers(6, 6));
  }
  for (const auto& fs : fusion_step(m, same, zero, 1.0, reference_options())) {
    for (int j = 1; j <= 6; ++j) CHECK(oracle::frobenius(fs.X_tilde.at(j).mat() - Xs.mat()) <= 1e-12);
  }

  // Random copies and multipliers against the direct mean of X - Lambda / c.
  std::vector<LocalVars> rv;
  std::vector<Multipliers> rm;
  for (int k = 1; k <= 6; ++k) {
    LocalVars v = uniform_vars(k, 6, Xs, 100.0 + k);
    Multipliers mu = zero_multipliers(6, 6);
    mu.lambda = 0.3 * k;
    for (int j = 1; j <= 6; ++j) {
      v.X[j] = SymMat(oracle::random_symmetric(rng, 6));
      mu.Lambda[j] = SymMat(oracle::random_symmetric(rng, 6));
    }
    rv.push_back(v);
    rm.push_back(mu);
  }
  const double c = 2.5;
  const auto fr = fusion_step(m, rv, rm, c, reference_options());
  double beta_ref = 0.0;
  for (int k = 0; k < 6; ++k) beta_ref += (rv[k].beta - rm[k].lambda / c) / 6.0;
  for (int j = 1; j <= 6; ++j) {
    Mat ref = Mat::Zero(6, 6);
    for (int k = 0; k < 6; ++k) ref += (rv[k].X.at(j).mat() - rm[k].Lambda.at(j).mat() / c) / 6.0;
    for (const auto& fs : fr) CHECK(oracle::frobenius(fs.X_tilde.at(j).mat() - ref) <= 1e-12 * (1 + oracle::frobenius(ref)));
  }
  for (const auto& fs : fr) CHECK(fs.beta_tilde == doctest::Approx(beta_ref).epsilon(1e-14));
}

TEST_CASE("initialization") {
  const NetworkModel& m = reference_model();
  DistributedOptions opts = reference_options();
  for (int k = 1; k <= 6; ++k) {
    NodeAgent a(m, k, opts);
    a.init_feasible(100.0);
    CHECK(a.feasibility_violation() <= 1e-6);
    CHECK(a.vars().beta == 100.0);
    CHECK(a.multipliers().lambda == 1.0);
  }
  NodeAgent bad(m, 1, opts);
  try {
    bad.init_feasible(1e12);
    FAIL("expected InitError");
  } catch (const InitError& e) {
    CHECK(e.node() == 1);
    CHECK(std::string(e.what()).find("node 1") != std::string::npos);
  }
}

TEST_CASE("dual step") {
  const NetworkModel toy = toy_scenario().model();
  DistributedOptions opts = toy_scenario().synthesis.distributed_options();
  NodeAgent a(toy, 1, opts);
  a.init_feasible(1.0);
  Multipliers mu = a.multipliers();
  mu.lambda = 0.7;
  a.set_state(a.vars(), mu);

  FusionState f;
  f.beta_tilde = a.vars().beta;
  f.X_tilde = a.vars().X;
  a.dual_step(f, 1.0);
  CHECK(a.multipliers().lambda == 0.7);
  for (int j : a.copies()) CHECK(a.multipliers().Lambda.at(j) == mu.Lambda.at(j));

  f.beta_tilde = a.vars().beta + 0.5;
  a.dual_step(f, 1.0);
  CHECK(a.multipliers().lambda == doctest::Approx(1.2).epsilon(1e-15));
}

TEST_CASE("local step in the proximal limit returns a feasible fusion point") {
  const NetworkModel& m = reference_model();
  const ScenarioConfig cfg = reference_scenario();
  const CentralizedResult c = solve_centralized(m, cfg.synthesis.lmi, 100.0, SolverOptions{});
  REQUIRE(c.solution.status == SolveStatus::Optimal);
  DistributedOptions opts = reference_options();
  NodeAgent a(m, 2, opts);
  a.init_feasible(100.0);
  a.set_state(a.vars(), zero_multipliers(6, 6));
  FusionState f;
  f.beta_tilde = 100.0;
  for (int j = 1; j <= 6; ++j) f.X_tilde[j] = c.X[j - 1];
  REQUIRE(a.local_step(f, 1e4));
  CHECK(a.vars().beta == 100.0);
  for (int j = 1; j <= 6; ++j) {
    const double scale = oracle::frobenius(c.X[j - 1].mat());
    CHECK(oracle::frobenius(a.vars().X.at(j).mat() - c.X[j - 1].mat()) <= 1e-4 * scale);
  }
  CHECK(a.feasibility_violation() <= 1e-6);
}

TEST_CASE("fixed-beta run on the six-sensor example") {
  const NetworkModel& m = reference_model();
  DistributedOptions opts = reference_options();
  DistributedSolver solver(m, opts);
  solver.initialize();
  for (int t = 0; t < 70; ++t) {
    const IterationRecord& r = solver.iterate();
    CHECK(r.max_feas_violation <= 1e-6);
    CHECK(r.beta_ave == 100.0);
    for (const auto& v : solver.vars()) {
      CHECK(v.beta == 100.0);
      CHECK(theorem1_bounds(v.X.at(v.node), v.F, opts.lmi.rho).ok);
    }
    for (const auto& mu : solver.multipliers())
      for (const auto& [j, L] : mu.Lambda) CHECK(L.mat() == L.mat().transpose());
  }
  const auto& tr = solver.trace().records;
  CHECK(tr.front().error > 10.0);
  CHECK(tr.back().error < 0.1);
  CHECK(tr.back().error < 0.01 * tr.front().error);

  const Gains g = solver.gains();
  for (int i = 0; i < 6; ++i) {
    CHECK(g.K[0](i, i) > 1.0);
    CHECK(g.K[0](i, i) < 1000.0);
  }
}

TEST_CASE("variable-beta run on the three-node toy matches the centralized optimum") {
  const ScenarioConfig cfg = toy_scenario();
  const NetworkModel m = cfg.model();
  const CentralizedResult c = solve_centralized(m, cfg.synthesis.lmi, std::nullopt, cfg.synthesis.solver);
  REQUIRE(c.solution.status == SolveStatus::Optimal);
  DistributedOptions opts = cfg.synthesis.distributed_options();
  const DistributedResult a = run_distributed(m, opts);
  const DistributedResult b = run_distributed(m, opts);
  CHECK(a.converged);
  CHECK(a.trace.records.back().error < 1e-3);
  CHECK(std::abs(a.gains.beta - c.beta) <= 1e-2 * c.beta);
  std::ostringstream sa, sb;
  a.trace.write_csv(sa, true);
  b.trace.write_csv(sb, true);
  CHECK(sa.str() == sb.str());

  SUBCASE("neighbourhood copies reach the same optimum") {
    DistributedOptions nb = opts;
    nb.copies = CopyMode::Neighborhood;
    const DistributedResult r = run_distributed(m, nb);
    CHECK(std::abs(r.gains.beta - c.beta) <= 1e-2 * c.beta);
  }
}

TEST_CASE("linear consensus keeps every message on an edge") {
  const ScenarioConfig cfg = toy_scenario();
  const NetworkModel m = cfg.model();
  DistributedOptions opts = cfg.synthesis.distributed_options();
  opts.consensus = ConsensusProtocol::linear(50, 0.3);
  opts.log_messages = true;
  opts.max_iter = 20;
  const DistributedResult r = run_distributed(m, opts);
  CHECK(!r.messages.entries().empty());
  CHECK(r.messages.non_local(m.graph).empty());
  std::ostringstream os;
  r.messages.write_csv(os);
  CHECK(os.str().rfind("iteration,sender,receiver,bytes\n", 0) == 0);
}

TEST_CASE("single node") {
  const NetworkModel m = single_node_model();
  DistributedOptions opts;
  opts.lmi.rho = 10.0;
  opts.max_iter = 5;
  opts.tol = 0.0;
  CHECK_THROWS_AS(DistributedSolver(m, opts), std::invalid_argument);
  opts.fixed_beta = 1.0;
  const DistributedResult r = run_distributed(m, opts);
  REQUIRE(r.trace.size() == 5);
  for (const auto& rec : r.trace.records) CHECK(rec.error == 0.0);
  const CentralizedProblem cp = centralized_problem(m, opts.lmi, 1.0);
  Vec x = Vec::Zero(cp.layout.size());
  cp.layout.insert(x, x_name(1), r.vars[0].X.at(1).mat());
  cp.layout.insert(x, f_name(1), r.vars[0].F);
  CHECK(check_feasible(x, cp.problem, 1e-6).ok);
}

TEST_CASE("option validation") {
  const NetworkModel& m = reference_model();
  DistributedOptions opts = reference_options();
  opts.c = 0.0;
  CHECK_THROWS_AS(DistributedSolver(m, opts), std::invalid_argument);
  opts = reference_options();
  opts.copies = CopyMode::Neighborhood;
  CHECK_THROWS_AS(DistributedSolver(m, opts), std::invalid_argument);
}

TEST_CASE("out-neighbour fusion averages over the out-neighbours") {
  const NetworkModel& m = reference_model();
  DistributedOptions opts = reference_options();
  opts.fusion = FusionRule::OutNeighbor;
  std::mt19937_64 rng(53);
  std::vector<LocalVars> vars;
  std::vector<Multipliers> mult;
  for (int k = 1; k <= 6; ++k) {
    LocalVars v = uniform_vars(k, 6, SymMat::identity(6), 100.0);
    for (int j = 1; j <= 6; ++j) v.X[j] = SymMat(oracle::random_symmetric(rng, 6));
    vars.push_back(v);
    mult.push_back(zero_multipliers(6, 6));
  }
  const auto f = fusion_step(m, vars, mult, 1.0, opts);
  for (int j = 1; j <= 6; ++j) {
    // On the directed cycle M_j = {j + 1}.
    const int succ = j % 6 + 1;
    for (const auto& fs : f) CHECK(oracle::frobenius(fs.X_tilde.at(j).mat() - vars[succ - 1].X.at(j).mat()) <= 1e-14);
  }
}

TEST_CASE("beta average does not decrease on the six-sensor example") {
  DistributedOptions opts = reference_options();
  opts.fixed_beta.reset();
  opts.max_iter = 15;
  opts.tol = 0.0;
  const DistributedResult r = run_distributed(reference_model(), opts);
  REQUIRE(r.trace.size() == 15);
  CHECK(r.trace.records.front().beta_ave > 100.0);
  for (int t = 1; t < r.trace.size(); ++t)
    CHECK(r.trace.records[t].beta_ave >= r.trace.records[t - 1].beta_ave - 1e-6);
  for (const auto& rec : r.trace.records) CHECK(rec.max_feas_violation <= 1e-6);
}

TEST_CASE("runaway Error aborts the run") {
  const ScenarioConfig cfg = toy_scenario();
  DistributedOptions opts = cfg.synthesis.distributed_options();
  // Averaging over out-neighbours only does not converge on this instance.
  opts.fusion = FusionRule::OutNeighbor;
  opts.max_iter = 200;
  CHECK_THROWS_AS(run_distributed(cfg.model(), opts), DivergenceError);
  opts.divergence_window = 0;
  opts.max_iter = 30;
  CHECK(run_distributed(cfg.model(), opts).trace.size() == 30);
}
